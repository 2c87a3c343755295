import logging


def setup_logging(verbose: bool = False) -> None:
    """Log to stderr; `verbose` adds the per-batch and per-selection DEBUG records."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=[logging.StreamHandler()],
    )
