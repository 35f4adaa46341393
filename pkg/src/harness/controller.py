import argparse
import csv
import logging
import sys
from pathlib import Path

from src.agent.models import Algorithm, CriticRule
from src.dynamics.models import VehicleState
from src.env.models import TrajectoryKind
from src.exceptions import UsageError
from src.middleware.exception_handlers import handle_command_errors
from . import plotting
from . import service
from .service import SIMULATION_COLUMNS

logger = logging.getLogger(__name__)


def parse_window(text: str) -> tuple[int, int]:
    try:
        start, end = (int(part) for part in text.split(":"))
    except ValueError:
        raise UsageError(f"window must look like START:END, got {text!r}")
    return start, end


def parse_initial_state(text: str | None) -> VehicleState | None:
    if text is None:
        return None
    try:
        return VehicleState.from_array(float(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"initial state must be six comma-separated numbers x,y,psi,u,v,r, got {text!r}")


@handle_command_errors
def train_command(args: argparse.Namespace) -> int:
    config = service.load_run_config(
        args.config,
        algorithm=args.algo,
        trajectory=args.trajectory,
        n_actors=args.actors,
        m_critics=args.critics,
        critic_rule=args.critic_rule,
        episodes=args.episodes,
        steps_per_episode=args.steps,
        hidden=args.hidden,
        seed=args.seed,
        out_dir=args.out,
    )
    if args.trials > 1:
        results = service.train_trials(config, args.trials, args.workers)
        for result in results:
            print(result.csv_path)
    else:
        result = service.train(config)
        print(result.csv_path)
    return 0


@handle_command_errors
def evaluate_command(args: argparse.Namespace) -> int:
    config = service.load_run_config(args.config, trajectory=args.trajectory, seed=args.seed,
                                     steps_per_episode=args.steps, out_dir=args.out)
    summary = service.evaluate(args.checkpoint, config, initial=parse_initial_state(args.initial_state))
    print(service.summary_json(summary))
    return 0


@handle_command_errors
def stats_command(args: argparse.Namespace) -> int:
    result = service.stats_from_csvs(args.csvs, parse_window(args.window), args.baseline, args.baseline_r_av)
    print(service.summary_json(result))
    return 0


@handle_command_errors
def simulate_command(args: argparse.Namespace) -> int:
    rows = service.simulate_open_loop(args.thrust, args.rudder, args.duration, args.ts,
                                      parse_initial_state(args.initial_state))
    if args.out is not None:
        service.write_rows(args.out, SIMULATION_COLUMNS, rows)
        print(args.out)
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=SIMULATION_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return 0


@handle_command_errors
def plot_command(args: argparse.Namespace) -> int:
    plotting.emit_svg(args.input, args.out, args.kind)
    print(args.out)
    return 0


def register_commands(subparsers) -> None:
    train = subparsers.add_parser("train", help="Train MPQ-DPG or DDPG on a reference trajectory")
    train.add_argument("--config", type=Path, help="flat key = value config file")
    train.add_argument("--algo", choices=[a.value for a in Algorithm])
    train.add_argument("--trajectory", choices=[t.value for t in TrajectoryKind])
    train.add_argument("--actors", type=int)
    train.add_argument("--critics", type=int)
    train.add_argument("--critic-rule", choices=[r.value for r in CriticRule],
                       help="which critic each update trains: largest Bellman residual or uniform draw")
    train.add_argument("--episodes", type=int)
    train.add_argument("--steps", type=int, help="steps per episode")
    train.add_argument("--hidden", help="comma-separated hidden widths, e.g. 400,300")
    train.add_argument("--seed", type=int)
    train.add_argument("--out", type=Path)
    train.add_argument("--trials", type=int, default=1, help="independent seeds seed, seed+1, ...")
    train.add_argument("--workers", type=int, default=1)
    train.set_defaults(handler=train_command)

    evaluate = subparsers.add_parser("evaluate", help="Noise-free rollout of a checkpoint's average policy")
    evaluate.add_argument("--checkpoint", type=Path, required=True)
    evaluate.add_argument("--config", type=Path)
    evaluate.add_argument("--trajectory", choices=[t.value for t in TrajectoryKind])
    evaluate.add_argument("--seed", type=int)
    evaluate.add_argument("--steps", type=int)
    evaluate.add_argument("--initial-state", help="x,y,psi,u,v,r instead of a randomized start")
    evaluate.add_argument("--out", type=Path)
    evaluate.set_defaults(handler=evaluate_command)

    stats = subparsers.add_parser("stats", help="R_best, R_av, STD-DEV and IR over trial CSVs")
    stats.add_argument("csvs", nargs="+", type=Path)
    stats.add_argument("--window", default="500:1500")
    stats.add_argument("--baseline", type=Path, action="append", help="baseline training CSV (repeatable)")
    stats.add_argument("--baseline-r-av", type=float, help="published baseline R_av")
    stats.set_defaults(handler=stats_command)

    simulate = subparsers.add_parser("simulate", help="Open-loop dynamics rollout under constant input")
    simulate.add_argument("--thrust", type=float, default=0.0)
    simulate.add_argument("--rudder", type=float, default=0.0)
    simulate.add_argument("--duration", type=float, default=10.0)
    simulate.add_argument("--ts", type=float, default=0.1)
    simulate.add_argument("--initial-state")
    simulate.add_argument("--out", type=Path)
    simulate.set_defaults(handler=simulate_command)

    plot = subparsers.add_parser("plot", help="Render a rollout or training CSV as SVG")
    plot.add_argument("--in", dest="input", type=Path, required=True)
    plot.add_argument("--out", type=Path, required=True)
    plot.add_argument("--kind", choices=plotting.PLOT_KINDS,
                      help="default: learning curve for training CSVs, x-y overlay for rollouts")
    plot.set_defaults(handler=plot_command)
