"""
命令列介面 - Command Line Interface

場景檔進、CSV/PGM 出；使用 Click 和 Rich。
結束碼：0 成功、2 配置錯誤、3 輸入輸出錯誤、4 數值條件錯誤。
"""

from functools import wraps
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

import click
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from emit_mimo import __version__
from emit_mimo.analysis.sweeps import SweepConfig, SweepKind
from emit_mimo.data.scenario import load_scenario
from emit_mimo.pipeline import EmitPipeline
from emit_mimo.transmission.txsim import COMBINERS
from emit_mimo.utils.config import get_config, load_config_file, update_config
from emit_mimo.utils.errors import ConfigError, EmitError
from emit_mimo.utils.logger import get_logger, setup_logger

console = Console()
logger = get_logger(__name__)


class EmitCommandError(click.ClickException):
    """帶有結束碼的 CLI 錯誤 ClickException carrying the toolkit exit code"""

    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def handle_errors(func: Callable[..., Any]) -> Callable[..., Any]:
    """將函式庫錯誤轉為對應結束碼 Map library errors onto exit codes"""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return func(*args, **kwargs)
        except EmitError as e:
            console.print(f"❌ {type(e).__name__}: {e}", style="bold red")
            raise EmitCommandError(str(e), e.exit_code) from e

    return wrapper


def print_banner() -> None:
    """顯示程式橫幅"""
    banner = """
📡  EMIT MIMO 通道分析工具
   EMIT-Based MIMO Characterization Toolkit

   多重散射環境中的電磁資訊理論分析
   Electromagnetic information theory in multiple-scattering spaces
    """
    console.print(Panel(banner, style="bold blue", padding=(1, 2)))


def _pipeline(ctx: click.Context, need_scenario: bool = True) -> EmitPipeline:
    options: Dict[str, Any] = ctx.obj
    pipeline = EmitPipeline(
        out_dir=options["out"],
        seed=options["seed"],
        n_jobs=options["threads"],
        nmax=options["nmax"],
    )
    if need_scenario:
        if options["scenario"] is None:
            raise ConfigError("此命令需要 --scenario This command needs --scenario")
        pipeline.load_scenario(options["scenario"])
    return pipeline


def _spinner() -> Progress:
    return Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        console=console,
    )


def _files_table(pipeline: EmitPipeline) -> None:
    if not pipeline.writer.written:
        return
    table = Table(title="📁 輸出檔案 Output Files")
    table.add_column("檔案 File", style="cyan")
    table.add_column("路徑 Path", style="green")
    for name, path in pipeline.writer.written.items():
        table.add_row(name, str(path))
    console.print(table)


@click.group()
@click.version_option(version=__version__)
@click.option("--scenario", type=click.Path(), help="場景檔 Scenario file (YAML)")
@click.option("--out", type=click.Path(), help="輸出目錄 Output directory")
@click.option(
    "--seed", type=click.IntRange(0, 2**64 - 1), help="亂數種子 Random seed (u64)"
)
@click.option("--threads", type=click.IntRange(min=1), help="執行緒數 Worker threads")
@click.option("--nmax", type=click.IntRange(min=1), help="截斷階數 Truncation override")
@click.option("--debug", is_flag=True, help="啟用除錯模式 Enable debug mode")
@click.option(
    "--config-file", type=click.Path(exists=True), help="配置檔案路徑 Config file path"
)
@click.pass_context
def cli(
    ctx: click.Context,
    scenario: Optional[str],
    out: Optional[str],
    seed: Optional[int],
    threads: Optional[int],
    nmax: Optional[int],
    debug: bool,
    config_file: Optional[str],
) -> None:
    """
    📡 EMIT MIMO 通道分析工具 EMIT MIMO Characterization Toolkit

    以場景檔描述散射空間，產生場分布、模態頻譜、容量掃描與影像傳輸結果。
    """
    if config_file:
        console.print(
            f"📄 載入配置檔案 Loading config from: {config_file}", style="blue"
        )
        try:
            load_config_file(Path(config_file))
        except ValueError as e:
            raise EmitCommandError(
                f"配置檔無效 Invalid config file: {e}", ConfigError.exit_code
            ) from e
    if debug:
        console.print("🔧 除錯模式已啟用 Debug mode enabled", style="yellow")
        update_config(debug=True, log_level="DEBUG")
        setup_logger(level="DEBUG", enable_rich=False)
    if threads:
        update_config(n_jobs=threads)

    ctx.obj = {
        "scenario": scenario,
        "out": Path(out) if out else get_config().results_dir,
        "seed": seed,
        "threads": threads,
        "nmax": nmax,
    }


@cli.command()
@click.pass_context
@handle_errors
def fieldmap(ctx: click.Context) -> None:
    """計算探測網格上的正規化場分布 Normalized |E| on the probe grid"""
    pipeline = _pipeline(ctx)
    with _spinner() as progress:
        task = progress.add_task(
            "🌊 求解散射場 Solving the scattered field...", total=None
        )
        summary = pipeline.run_fieldmap()
        progress.update(task, description="✅ 場分布完成 Field map completed")

    n_max = "-" if summary["n_max"] is None else str(summary["n_max"])
    table = Table(title=f"🌊 場分布 Field Map: {summary['scenario']}")
    table.add_column("項目 Item", style="cyan")
    table.add_column("值 Value", style="green")
    table.add_row("散射體 Scatterers", str(summary["scatterers"]))
    table.add_row("截斷階數 N_max", n_max)
    table.add_row(
        "探測點 Probes", f"{summary['probes']:,} ({summary['masked']:,} masked)"
    )
    console.print(table)
    _files_table(pipeline)
    console.print(f"⏱️ 求解時間 Solve time: {summary['solve_seconds']:.4f} s")


@cli.command()
@click.option(
    "--no-maps", is_flag=True, help="不輸出模態場分布 Skip per-mode field maps"
)
@click.pass_context
@handle_errors
def modes(ctx: click.Context, no_maps: bool) -> None:
    """奇異值頻譜、有效容量與模態場分布 Singular spectrum, C_eff and mode maps"""
    pipeline = _pipeline(ctx)
    with _spinner() as progress:
        task = progress.add_task("🧮 分解通道 Decomposing the channel...", total=None)
        summary = pipeline.run_modes(with_maps=not no_maps)
        progress.update(task, description="✅ 模態分析完成 Mode analysis completed")

    shape = f"{summary['n_rx']}×{summary['n_tx']} ({summary['provenance']})"
    table = Table(title=f"🧮 模態分析 Modes: {summary['scenario']}")
    table.add_column("指標 Metric", style="cyan")
    table.add_column("數值 Value", style="green")
    table.add_row("通道 Channel", shape)
    table.add_row("有效容量 C_eff", f"{summary['c_eff']:.4f}")
    table.add_row("可用模態 Available modes", str(summary["available_modes"]))
    table.add_row(
        f"Shannon 容量 @ {summary['snr_db']:g} dB",
        f"{summary['shannon_capacity_bits']:.4f} bits/s/Hz",
    )
    console.print(table)
    _files_table(pipeline)


@cli.command()
@click.argument("kind", type=click.Choice([k.value for k in SweepKind]))
@click.option(
    "--distance-lambda",
    "distances",
    type=float,
    multiple=True,
    help="收發距離 (波長)，可重複 Distance, repeatable",
)
@click.option(
    "--value",
    "values",
    type=float,
    multiple=True,
    help="掃描值，可重複 Sweep value, repeatable",
)
@click.option(
    "--frequency-hz", type=float, default=3.0e9, show_default=True, help="頻率 Frequency"
)
@click.option(
    "--aperture-lambda", type=float, default=6.0, show_default=True, help="孔徑邊長 (波長)"
)
@click.option(
    "--sources-per-side",
    type=int,
    default=30,
    show_default=True,
    help="每邊源數 Sources per side",
)
@click.pass_context
@handle_errors
def sweep(
    ctx: click.Context,
    kind: str,
    distances: Tuple[float, ...],
    values: Tuple[float, ...],
    frequency_hz: float,
    aperture_lambda: float,
    sources_per_side: int,
) -> None:
    """
    自由空間有效容量掃描 Free-space C_eff sweep

    KIND: sources | aperture | distance
    """
    pipeline = _pipeline(ctx, need_scenario=False)
    try:
        config = SweepConfig(
            frequency_hz=frequency_hz,
            aperture_lambda=aperture_lambda,
            sources_per_side=sources_per_side,
        )
    except ValueError as e:
        raise ConfigError(f"掃描參數無效 Invalid sweep parameters: {e}") from e
    with _spinner() as progress:
        task = progress.add_task(f"📈 掃描 Sweeping {kind}...", total=None)
        table = pipeline.run_sweep(kind, distances, values or None, config)
        progress.update(task, description="✅ 掃描完成 Sweep completed")

    result = Table(title=f"📈 {kind} 掃描 Sweep")
    for column in table.columns:
        result.add_column(str(column), style="cyan" if column == "x" else "green")
    for row in table.itertuples(index=False):
        result.add_row(*(f"{v:.4g}" for v in row))
    console.print(result)
    _files_table(pipeline)


@cli.command()
@click.option(
    "--image", type=click.Path(), help="輸入 PGM 影像 Input PGM (預設為內建測試影像)"
)
@click.option(
    "--scheme", default="optimized", show_default=True, help="optimized 或 mode-k"
)
@click.option(
    "--combining",
    type=click.Choice(list(COMBINERS)),
    help="接收合併方式 Receiver combining",
)
@click.option(
    "--compare",
    "compare_seeds",
    type=click.IntRange(min=0),
    default=0,
    help="比較所有方案的種子數 Seeds for a scheme comparison",
)
@click.pass_context
@handle_errors
def transmit(
    ctx: click.Context,
    image: Optional[str],
    scheme: str,
    combining: Optional[str],
    compare_seeds: int,
) -> None:
    """經 EMIT 鏈路傳輸灰階影像 Transmit a grayscale image over the EMIT link"""
    pipeline = _pipeline(ctx)
    comparison = None
    with _spinner() as progress:
        task = progress.add_task(f"📡 傳輸 Transmitting ({scheme})...", total=None)
        metrics = pipeline.run_transmit(image, scheme, combining)
        if compare_seeds:
            comparison = pipeline.run_compare(image, compare_seeds, combining)
        progress.update(task, description="✅ 傳輸完成 Transmission completed")

    settings = f"{metrics['combining']}, {metrics['constraint']}"
    scheme_label = f"{metrics['scheme']} ({settings})"
    errors = f"{metrics['bit_errors']:,}/{metrics['n_bits']:,}"
    table = Table(title=f"📡 傳輸結果 Transmission: {metrics['scenario']}")
    table.add_column("指標 Metric", style="cyan")
    table.add_column("數值 Value", style="green")
    table.add_row("方案 Scheme", scheme_label)
    table.add_row("雜訊 χ", f"{metrics['chi']:g}")
    table.add_row("位元錯誤率 BER", f"{metrics['ber']:.6f} ({errors})")
    table.add_row("PSNR", f"{metrics['psnr']:.2f} dB")
    console.print(table)

    if comparison is not None:
        summary = comparison.groupby("scheme", sort=False)[["ber", "psnr"]].mean()
        compare_table = Table(
            title=f"📊 方案比較 Scheme comparison ({compare_seeds} seeds)"
        )
        compare_table.add_column("方案 Scheme", style="cyan")
        compare_table.add_column("平均 BER Mean BER", style="green")
        compare_table.add_column("平均 PSNR Mean PSNR", style="green")
        for name, row in summary.iterrows():
            compare_table.add_row(str(name), f"{row['ber']:.6f}", f"{row['psnr']:.2f}")
        console.print(compare_table)
    _files_table(pipeline)


@cli.group()
def oracle() -> None:
    """獨立驗證器 Independent oracles"""


@oracle.command()
@click.argument("scenarios", nargs=-1, type=click.Path())
@click.option("--golden-dir", type=click.Path(), help="黃金檔目錄 Golden directory")
@click.pass_context
@handle_errors
def regenerate(
    ctx: click.Context, scenarios: Sequence[str], golden_dir: Optional[str]
) -> None:
    """
    重新產生 golden/ 參考檔 Regenerate the golden reference files

    SCENARIOS: 場景檔 (預設為場景目錄中的所有 .yaml)
    """
    pipeline = _pipeline(ctx, need_scenario=False)
    paths = list(scenarios) or sorted(
        str(p) for p in Path(get_config().scenarios_dir).glob("*.yaml")
    )
    with _spinner() as progress:
        task = progress.add_task(
            f"🔬 執行驗證 Running oracles over {len(paths)} scenarios...", total=None
        )
        written = pipeline.regenerate_golden(paths, golden_dir)
        progress.update(task, description="✅ 黃金檔已更新 Golden files regenerated")

    table = Table(title="🔬 黃金檔 Golden Files")
    table.add_column("名稱 Name", style="cyan")
    table.add_column("路徑 Path", style="green")
    for name, path in written.items():
        table.add_row(name, str(path))
    console.print(table)


@cli.command()
@click.argument("scenario_file", type=click.Path())
@handle_errors
def validate(scenario_file: str) -> None:
    """
    驗證場景檔 (不計算) Validate a scenario file without computing

    SCENARIO_FILE: 要驗證的場景檔
    """
    console.print(f"🔍 驗證場景檔 Validating scenario: [bold]{scenario_file}[/bold]")
    scenario = load_scenario(scenario_file)

    table = Table(title="場景驗證結果 Scenario Validation Results")
    table.add_column("檢查項目 Check Item", style="cyan")
    table.add_column("狀態 Status", style="green")
    table.add_column("詳細資訊 Details")

    wavelength = scenario.wavenumber.wavelength
    frequency = f"{scenario.frequency_hz / 1e6:g} MHz (λ = {wavelength:.4f} m)"
    cylinders = f"{len(scenario.scatterer_list())} cylinders, no overlaps"
    table.add_row("名稱 Name", "✅", scenario.name)
    table.add_row("頻率 Frequency", "✅", frequency)
    table.add_row("空間 Space", "✅", scenario.space.value)
    table.add_row("發射陣列 Tx array", "✅", f"{len(scenario.tx_points())} elements")
    if scenario.rx is not None:
        table.add_row(
            "接收陣列 Rx array", "✅", f"{len(scenario.rx_points())} elements"
        )
    else:
        table.add_row(
            "接收陣列 Rx array", "⚠️", "未定義，modes/transmit 不可用 not defined"
        )
    table.add_row("散射體 Scatterers", "✅", cylinders)
    if scenario.probes is not None:
        points, shape = scenario.probe_points()
        detail = f"{shape[1]}×{shape[0]} grid" if shape else f"{len(points)} points"
        table.add_row("探測點 Probes", "✅", detail)
    else:
        table.add_row("探測點 Probes", "⚠️", "未定義，fieldmap 不可用 not defined")
    console.print(table)
    console.print("✅ 場景驗證通過 Scenario validation passed", style="bold green")


@cli.command()
def info() -> None:
    """顯示系統資訊 Show system information"""
    config = get_config()

    table = Table(title="系統資訊 System Information")
    table.add_column("項目 Item", style="cyan")
    table.add_column("值 Value", style="green")

    table.add_row("專案名稱 Project Name", config.project_name)
    table.add_row("版本 Version", config.version)
    table.add_row("結果目錄 Results Directory", str(config.results_dir))
    table.add_row("黃金檔目錄 Golden Directory", str(config.golden_dir))
    table.add_row("場景目錄 Scenarios Directory", str(config.scenarios_dir))
    table.add_row("執行緒 Threads", str(config.n_jobs))
    table.add_row("條件數上限 Condition Limit", f"{config.cond_limit:g}")
    table.add_row("殘差上限 Residual Tolerance", f"{config.residual_tol:g}")
    table.add_row("日誌級別 Log Level", config.log_level)

    console.print(table)


@cli.command()
def list_commands() -> None:
    """顯示所有可用命令 Show all available commands"""
    print_banner()

    commands_table = Table(title="📋 可用命令列表 Available Commands")
    commands_table.add_column("命令 Command", style="cyan", width=20)
    commands_table.add_column("功能說明 Description", style="green", width=44)
    commands_table.add_column("範例 Example", style="yellow", width=48)

    commands_data = [
        (
            "fieldmap",
            "探測網格上的場分布\nField map on the probe grid",
            "emit --scenario scenarios/cylinders_1x5.yaml fieldmap",
        ),
        (
            "modes",
            "奇異值與模態場分布\nSingular values and mode maps",
            "emit --scenario scenarios/cluster_10x10.yaml modes",
        ),
        (
            "sweep",
            "自由空間容量掃描\nFree-space C_eff sweep",
            "emit sweep sources --distance-lambda 5 --distance-lambda 20",
        ),
        (
            "transmit",
            "影像傳輸\nImage transmission",
            "emit --scenario scenarios/image_link_3x3.yaml transmit --scheme mode-3",
        ),
        (
            "oracle regenerate",
            "重新產生黃金檔\nRegenerate golden files",
            "emit oracle regenerate",
        ),
        (
            "validate",
            "驗證場景檔\nValidate a scenario file",
            "emit validate scenarios/cylinders_4x5.yaml",
        ),
        ("info", "顯示系統資訊\nShow system information", "emit info"),
        (
            "list-commands",
            "顯示所有可用命令\nShow all available commands",
            "emit list-commands",
        ),
    ]
    for command, description, example in commands_data:
        commands_table.add_row(command, description, example)
    console.print(commands_table)

    options_table = Table(title="⚙️ 全域選項 Global Options")
    options_table.add_column("選項 Option", style="cyan", width=25)
    options_table.add_column("說明 Description", style="green", width=55)
    for option, description in [
        ("--scenario", "場景檔 Scenario file"),
        ("--out", "輸出目錄 Output directory"),
        ("--seed", "亂數種子 Random seed"),
        ("--threads", "執行緒數 Worker threads"),
        ("--nmax", "截斷階數 Truncation override"),
        ("--debug", "啟用除錯模式 Enable debug mode"),
        ("--config-file", "指定配置檔案 Specify config file"),
    ]:
        options_table.add_row(option, description)
    console.print(options_table)

    console.print("\n💡 使用提示 Usage Tips:", style="bold blue")
    console.print(
        "1. 🔍 查看特定命令幫助 Get help for a command: "
        "[bold]emit [COMMAND] --help[/bold]"
    )
    console.print(
        "2. ✅ 先驗證場景 Validate first: "
        "[bold]emit validate scenarios/cylinders_4x5.yaml[/bold]"
    )
    console.print(
        "3. 🔁 重現所有場景 Reproduce every scene: "
        "[bold]python scripts/reproduce_scenarios.py[/bold]"
    )


def main() -> None:
    """主入口點"""
    cli()


if __name__ == "__main__":
    main()
