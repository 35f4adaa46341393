import argparse

from src.harness.controller import register_commands as register_harness_commands
from src.log_config import DEFAULT_LOG_LEVEL, LogLevels


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpq-dpg", description="Ensemble actor-critic AUV tracking control")
    parser.add_argument("--log-level", default=DEFAULT_LOG_LEVEL, choices=[level.value for level in LogLevels],
                        type=str.upper)
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_harness_commands(subparsers)
    return parser
