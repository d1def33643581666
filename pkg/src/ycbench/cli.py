"""The ``yc-bench`` command line.

Two audiences share one binary. Agents get the in-world grammar
(``market browse``, ``task accept``, ...) executed against the session
named by ``--session`` or ``YC_SESSION_DIR``; every result is a JSON
document on stdout and the process exits 0 even when the world said no,
so a scripted agent can read the error instead of crashing. Operators
get ``init``, ``run``, ``replay``, ``stats``, ``conformance`` and
``info``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import click

from . import __version__, analytics, commands, harness, runlog
from .config import BenchConfig, load_config, load_preset
from .model import state_hash
from .session import (
    SESSION_ENV_VAR,
    Session,
    SessionError,
    read_snapshot,
    resolve_session_root,
)


@click.group()
@click.version_option(__version__, prog_name="yc-bench")
def main() -> None:
    """Run and inspect one-year startup simulations."""


_session_option = click.option(
    "--session",
    "session_dir",
    default=None,
    metavar="DIR",
    help=f"Session directory; falls back to ${SESSION_ENV_VAR}.",
)


def _echo_json(doc: Any) -> None:
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


def _open_session(session_dir: str | None) -> Session:
    try:
        return Session.open(resolve_session_root(session_dir))
    except SessionError as exc:
        raise click.ClickException(str(exc)) from None


def _world_command(session_dir: str | None, path: tuple[str, str], **raw: Any) -> None:
    args = {k: v for k, v in raw.items() if v is not None}
    line = commands.format_command(commands.Command(path=path, args=args))
    sess = _open_session(session_dir)
    try:
        result = sess.execute_line(line)
    finally:
        sess.close()
    _echo_json(result.to_dict())


# -- agent-facing grammar ------------------------------------------------


@main.group()
def company() -> None:
    """Company-level views."""


@company.command("status")
@_session_option
def company_status(session_dir: str | None) -> None:
    """Funds, payroll, runway, prestige, active work."""
    _world_command(session_dir, ("company", "status"))


@main.group()
def employee() -> None:
    """The team."""


@employee.command("list")
@_session_option
def employee_list(session_dir: str | None) -> None:
    """Salaries, per-domain rates, current load."""
    _world_command(session_dir, ("employee", "list"))


@main.group()
def market() -> None:
    """The task market."""


@market.command("browse")
@click.option("--domain", default=None, help="Only tasks needing this domain.")
@click.option("--reward-min-cents", type=int, default=None, help="Minimum advertised reward.")
@click.option("--limit", type=int, default=None, help="At most this many rows.")
@_session_option
def market_browse(domain, reward_min_cents, limit, session_dir) -> None:
    """Open tasks, highest reward first."""
    _world_command(
        session_dir,
        ("market", "browse"),
        domain=domain,
        reward_min_cents=reward_min_cents,
        limit=limit,
    )


@main.group()
def task() -> None:
    """Work on tasks."""


@task.command("list")
@click.option("--status", default=None, help="Filter by task status.")
@_session_option
def task_list(status, session_dir) -> None:
    """Every task the company has touched."""
    _world_command(session_dir, ("task", "list"), status=status)


@task.command("inspect")
@click.option("--task-id", required=True)
@_session_option
def task_inspect(task_id, session_dir) -> None:
    """Full detail on one task."""
    _world_command(session_dir, ("task", "inspect"), task_id=task_id)


@task.command("accept")
@click.option("--task-id", required=True)
@_session_option
def task_accept(task_id, session_dir) -> None:
    """Take a market task onto the books; starts its deadline."""
    _world_command(session_dir, ("task", "accept"), task_id=task_id)


@task.command("assign")
@click.option("--task-id", required=True)
@click.option("--employees", required=True, help="Comma-separated employee ids.")
@_session_option
def task_assign(task_id, employees, session_dir) -> None:
    """Set exactly who works a task."""
    ids = [p.strip() for p in employees.split(",") if p.strip()]
    _world_command(session_dir, ("task", "assign"), task_id=task_id, employees=ids)


@task.command("dispatch")
@click.option("--task-id", required=True)
@_session_option
def task_dispatch(task_id, session_dir) -> None:
    """Start work on an assigned task."""
    _world_command(session_dir, ("task", "dispatch"), task_id=task_id)


@task.command("cancel")
@click.option("--task-id", required=True)
@click.option("--reason", required=True)
@_session_option
def task_cancel(task_id, reason, session_dir) -> None:
    """Abandon an accepted task; costs prestige."""
    _world_command(session_dir, ("task", "cancel"), task_id=task_id, reason=reason)


@main.group()
def client() -> None:
    """The people paying you."""


@client.command("list")
@_session_option
def client_list(session_dir) -> None:
    """Clients and your standing with them."""
    _world_command(session_dir, ("client", "list"))


@client.command("history")
@_session_option
def client_history(session_dir) -> None:
    """Per-client record of completions and failures."""
    _world_command(session_dir, ("client", "history"))


@main.group()
def finance() -> None:
    """Money."""


@finance.command("ledger")
@_session_option
def finance_ledger(session_dir) -> None:
    """Every debit and credit since founding."""
    _world_command(session_dir, ("finance", "ledger"))


@main.group()
def sim() -> None:
    """Clock control."""


@sim.command("resume")
@_session_option
def sim_resume(session_dir) -> None:
    """Let time run until the next event needs a decision."""
    _world_command(session_dir, ("sim", "resume"))


@main.group()
def scratchpad() -> None:
    """Persistent notes, surfaced in every turn prompt."""


@scratchpad.command("write")
@click.option("--content", required=True)
@_session_option
def scratchpad_write(content, session_dir) -> None:
    """Replace the scratchpad."""
    _world_command(session_dir, ("scratchpad", "write"), content=content)


@scratchpad.command("append")
@click.option("--content", required=True)
@_session_option
def scratchpad_append(content, session_dir) -> None:
    """Add a line to the scratchpad."""
    _world_command(session_dir, ("scratchpad", "append"), content=content)


# -- operator commands ---------------------------------------------------


def _build_config(preset: str, config_path: str | None, sets: tuple[str, ...]) -> BenchConfig:
    cfg = load_config(config_path) if config_path else load_preset(preset)
    overrides: dict[str, Any] = {}
    for item in sets:
        key, eq, raw = item.partition("=")
        if not eq:
            raise click.ClickException(f"--set wants KEY=VALUE, got {item!r}")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    try:
        return cfg.with_overrides(**overrides) if overrides else cfg
    except TypeError as exc:
        raise click.ClickException(str(exc)) from None


_config_options = [
    click.option("--preset", default="default", show_default=True, help="Named config preset."),
    click.option("--config", "config_path", default=None, metavar="PATH", help="Config JSON file."),
    click.option(
        "--set",
        "sets",
        multiple=True,
        metavar="KEY=VALUE",
        help="Override one config field (value parsed as JSON).",
    ),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@main.command()
@click.option("--seed", type=int, required=True)
@_with_options(_config_options)
@_session_option
def init(seed, preset, config_path, sets, session_dir) -> None:
    """Create a fresh session directory with a generated world."""
    root = resolve_session_root(session_dir)
    if (root / "snapshot.json").exists():
        raise click.ClickException(f"{root} already holds a session")
    cfg = _build_config(preset, config_path, sets)
    try:
        sess = Session.open_or_create(root, seed=seed, config=cfg)
    except SessionError as exc:
        raise click.ClickException(str(exc)) from None
    try:
        doc = {
            "session": str(root),
            "session_id": sess.meta["session_id"],
            "seed": seed,
            "funds": sess.state.funds,
            "clients": [c.id for c in sess.state.clients],
            "market": len(sess.state.market),
        }
    finally:
        sess.close()
    _echo_json(doc)


@main.command()
@click.option("--seed", type=int, default=None, help="Required unless the session already exists.")
@click.option("--builtin", "builtin_name", default=None, help="Built-in agent: greedy or silent.")
@click.option("--model-cmd", default=None, metavar="CMD", help="Spawn CMD; speak the turn protocol on its stdio.")
@click.option("--connect", default=None, metavar="HOST:PORT", help="Agent already listening on TCP.")
@click.option("--context-window", type=int, default=None, help="History turns kept in the prompt.")
@click.option("--max-turns", type=int, default=None, help="Stop after this many turns.")
@click.option("--timeout", type=float, default=120.0, show_default=True, help="Per-turn reply timeout (wire agents).")
@click.option("--report", "report_path", default=None, metavar="PATH", help="Where to write the episode report.")
@click.option("--persist-snapshots", is_flag=True, help="Snapshot after every command, not just every turn.")
@_with_options(_config_options)
@_session_option
def run(
    seed,
    builtin_name,
    model_cmd,
    connect,
    context_window,
    max_turns,
    timeout,
    report_path,
    persist_snapshots,
    preset,
    config_path,
    sets,
    session_dir,
) -> None:
    """Drive a full episode with an agent and write the report."""
    chosen = [x for x in (builtin_name, model_cmd, connect) if x]
    if len(chosen) != 1:
        raise click.ClickException("pick exactly one of --builtin, --model-cmd, --connect")
    root = resolve_session_root(session_dir)

    existing = root / "config.json"
    if existing.exists():
        doc = json.loads(existing.read_text(encoding="utf-8"))
        seed = doc["seed"]
        cfg = BenchConfig.from_dict(doc["config"])
    else:
        if seed is None:
            raise click.ClickException("--seed is required for a new session")
        cfg = _build_config(preset, config_path, sets)

    if builtin_name:
        try:
            agent = harness.make_builtin(builtin_name, cfg)
        except ValueError as exc:
            raise click.ClickException(str(exc)) from None
    elif model_cmd:
        agent = harness.StdioAgent(model_cmd, timeout=timeout)
    else:
        host, _, port = connect.rpartition(":")
        if not host or not port.isdigit():
            raise click.ClickException(f"--connect wants HOST:PORT, got {connect!r}")
        agent = harness.SocketAgent(host, int(port), timeout=timeout)

    try:
        report = harness.run_episode(
            root,
            seed,
            cfg,
            agent,
            context_window=context_window,
            max_turns=max_turns,
            persist_snapshots=persist_snapshots,
        )
    except SessionError as exc:
        raise click.ClickException(str(exc)) from None
    out = Path(report_path) if report_path else root / "report.json"
    out.write_text(report.canonical_json() + "\n", encoding="utf-8")
    _echo_json(
        {
            "outcome": report.outcome,
            "final_funds": report.final_funds,
            "turns": report.turn_count,
            "cost_usd": report.total_cost_usd,
            "final_hash": report.final_hash,
            "report": str(out),
        }
    )


@main.command()
@click.argument("target", required=False)
@_session_option
def replay(target, session_dir) -> None:
    """Re-execute a run log and check it lands on the recorded final state.

    A finished log is checked against its own end record; a live session's
    log is checked against the current snapshot.
    """
    if target:
        path = Path(target)
    else:
        path = resolve_session_root(session_dir)
    expected = None
    if path.is_dir():
        snap = path / "snapshot.json"
        path = path / "run.log"
        try:
            records = runlog.read_log(path)
        except (runlog.LogError, FileNotFoundError) as exc:
            raise click.ClickException(str(exc)) from None
        if records[-1].get("type") != "end" and snap.exists():
            expected = state_hash(read_snapshot(snap))
    try:
        final_hash = runlog.verify_replay(path, expected_hash=expected)
    except (runlog.LogError, FileNotFoundError) as exc:
        raise click.ClickException(str(exc)) from None
    _echo_json({"ok": True, "log": str(path), "final_hash": final_hash})


@main.command()
@click.argument("sessions", nargs=-1, required=True)
@click.option("--label", default=None, help="Group label; defaults to each directory's name.")
@click.option("--out", "out_dir", default=None, metavar="DIR", help="Also write the CSV tables here.")
def stats(sessions, label, out_dir) -> None:
    """Summarize finished runs: funds, failures, behavior, leaderboard."""
    runs = []
    for item in sessions:
        root = Path(item)
        records = runlog.read_log(root / "run.log")
        flags = None
        snap = root / "snapshot.json"
        if snap.exists():
            flags = analytics.privileged_client_flags(snap)
        runs.append(
            analytics.compute_stats(records, adversarial_clients=flags, label=label or root.name)
        )
    doc: dict[str, Any] = {
        "runs": [r.to_dict() for r in runs],
        "leaderboard": analytics.aggregate(runs),
    }
    if out_dir:
        written = analytics.write_tables(out_dir, runs)
        doc["tables"] = [str(p) for p in written]
    _echo_json(doc)


@main.command()
@click.option("--model-cmd", default=None, metavar="CMD", help="Spawn CMD and test it.")
@click.option("--connect", default=None, metavar="HOST:PORT", help="Test a listening agent.")
@click.option("--timeout", type=float, default=30.0, show_default=True)
def conformance(model_cmd, connect, timeout) -> None:
    """Check that an external agent speaks the turn protocol."""
    if bool(model_cmd) == bool(connect):
        raise click.ClickException("pick exactly one of --model-cmd, --connect")
    if model_cmd:
        agent = harness.StdioAgent(model_cmd, timeout=timeout)
    else:
        host, _, port = connect.rpartition(":")
        if not host or not port.isdigit():
            raise click.ClickException(f"--connect wants HOST:PORT, got {connect!r}")
        agent = harness.SocketAgent(host, int(port), timeout=timeout)
    problems = harness.check_wire_conformance(agent)
    _echo_json({"ok": not problems, "problems": problems})
    if problems:
        raise SystemExit(1)


@main.command()
@_session_option
def info(session_dir) -> None:
    """Version, schemas, and (with a session) where that session stands."""
    doc: dict[str, Any] = {
        "version": __version__,
        "grammar": commands.GRAMMAR_VERSION,
        "log_schema": runlog.LOG_SCHEMA,
        "wire_schema": harness.WIRE_SCHEMA,
        "commands": sorted(" ".join(p) for p in commands.COMMAND_SPECS),
    }
    try:
        root = resolve_session_root(session_dir)
    except SessionError:
        root = None
    if root is not None and (root / "snapshot.json").exists():
        sess = _open_session(str(root))
        try:
            doc["session"] = {
                "root": str(root),
                "session_id": sess.meta["session_id"],
                "turn": sess.meta["turn"],
                "timestamp": sess.state.clock.timestamp.strftime("%Y-%m-%dT%H:%M"),
                "funds": sess.state.funds,
                "outcome": sess.state.outcome,
            }
        finally:
            sess.close()
    _echo_json(doc)


if __name__ == "__main__":
    main()
