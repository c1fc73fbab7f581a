import logging

import click

from app.artifacts.config import Config
from app.commands.common import CliState

# Import commands from their modules
from .commands.training import (
    build_sif_command,
    build_vocab_command,
    split_command,
    train_hmmlda_command,
    train_lm_command,
)
from .commands.decoding import decode_command, diagnose_command, repl_command, rerank_command
from .commands.evaluation import eval_command, significance_command, tune_command

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str) -> None:
    """Logs go to the diagnostic stream; standard output carries results only."""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, force=True)


def create_app() -> click.Group:
    @click.group(context_settings={"help_option_names": ["-h", "--help"]})
    @click.option("--run-dir", type=str, default=None, help="Directory holding the model artifacts of a run.")
    @click.option("--config", "config_path", type=str, default=None, help="Run configuration file (default: run.ini in the run directory).")
    @click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False), default=None)
    @click.option("--force", is_flag=True, help="Overwrite existing model artifacts.")
    @click.pass_context
    def cli(ctx, run_dir, config_path, log_level, force):
        """Distributional-constraint response generation toolkit."""
        configure_logging(log_level or Config.LOG_LEVEL)
        ctx.obj = CliState(run_dir=run_dir or Config.RUN_DIR, config_path=config_path, force=force)

    # --- Register Commands ---
    cli.add_command(build_vocab_command)
    cli.add_command(split_command)
    cli.add_command(train_hmmlda_command)
    cli.add_command(build_sif_command)
    cli.add_command(train_lm_command)
    cli.add_command(decode_command)
    cli.add_command(rerank_command)
    cli.add_command(eval_command)
    cli.add_command(significance_command)
    cli.add_command(tune_command)
    cli.add_command(diagnose_command)
    cli.add_command(repl_command)

    return cli
