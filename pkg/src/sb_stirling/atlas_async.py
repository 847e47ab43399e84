import asyncio
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from itertools import chain
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

from .atlas import Atlas, classify_n
from .errors import ConfigError
from .zeros import ZeroLimits, report_to_records

T = TypeVar('T')
R = TypeVar('R')


def setup_logging(logger: Optional[logging.Logger] = None) -> logging.Logger:
    """Set up the package logger with a single console handler."""
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    # Create console handler
    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    console_handler.setLevel(logging.WARNING)

    if logger is None:
        logger = logging.getLogger("sb_stirling")
        logger.setLevel(logging.WARNING)  # Only show warnings and errors
        logger.propagate = False
        if not logger.handlers:
            logger.addHandler(console_handler)

    return logger


def classify_records(job: Tuple[int, ZeroLimits, bool]) -> List[Dict[str, Any]]:
    """Atlas lines for one n; runs in a worker process."""
    n, limits, tag = job
    return [record for report in classify_n(n, limits, tag) for record in report_to_records(n, report)]


class AsyncAtlasBuilder:
    """Fans zero classification and verification grids out over worker processes."""

    def __init__(
        self,
        workers: int = 1,
        limits: Optional[ZeroLimits] = None,
        cache_dir: Optional[Union[str, Path]] = None,
        logger: Optional[logging.Logger] = None,
    ):
        """Initialize the builder.

        Args:
            workers: Number of worker processes; 1 runs everything inline
            limits: Zero-finder limits shared by every n
            cache_dir: Optional directory holding one finished atlas file per n
            logger: Optional logger instance. If not provided, a default logger will be created.
        """
        if workers < 1:
            raise ConfigError(f"workers must be at least 1, got {workers}")
        self.workers = workers
        self.limits = limits or ZeroLimits()
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.logger = setup_logging(logger)
        self._executor: Optional[ProcessPoolExecutor] = None

    async def __aenter__(self) -> 'AsyncAtlasBuilder':
        """Async context manager entry"""
        return self

    async def __aexit__(self, exc_type, exc_val, exc_tb) -> None:
        """Async context manager exit"""
        await self.close()

    async def close(self) -> None:
        """Shut down the worker pool, if one was started."""
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def _pool(self) -> ProcessPoolExecutor:
        if self._executor is None:
            self.logger.debug(f"Starting process pool with {self.workers} workers")
            self._executor = ProcessPoolExecutor(max_workers=self.workers)
        return self._executor

    async def run_grid(self, func: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Apply ``func`` to every item; results come back in input order.

        ``func`` must be a module-level function so worker processes can
        import it.
        """
        items = list(items)
        if self.workers == 1 or len(items) <= 1:
            return [func(item) for item in items]
        loop = asyncio.get_running_loop()
        pool = self._pool()
        futures = [loop.run_in_executor(pool, func, item) for item in items]
        return list(await asyncio.gather(*futures))

    def _cache_path(self, n: int, tag: bool) -> Optional[Path]:
        if self.cache_dir is None:
            return None
        lim = self.limits
        name = f"atlas-n{n}-d{lim.depth}-cap{lim.cap}-m{lim.max_log_modulus}-s{lim.sample_log}"
        return self.cache_dir / f"{name}{'-tagged' if tag else ''}.jsonl"

    def _read_cached(self, n: int, tag: bool) -> Optional[List[Dict[str, Any]]]:
        path = self._cache_path(n, tag)
        if path is None or not path.exists():
            return None
        with path.open(encoding="utf-8") as f:
            records = [json.loads(line) for line in f if line.strip()]
        self.logger.info(f"Loaded P_{n} from cache {path}")
        return records

    def _write_cached(self, n: int, tag: bool, records: Sequence[Dict[str, Any]]) -> None:
        path = self._cache_path(n, tag)
        if path is None:
            return
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as f:
            for record in records:
                f.write(json.dumps(record) + "\n")

    async def build_atlas(
        self, n_values: Iterable[int], tag: bool = True, existing: Optional[Atlas] = None
    ) -> Atlas:
        """Classify every starting class for each n.

        Args:
            n_values: Indices to classify
            tag: Mark zeros covered by a proven family as theorem-backed
            existing: Atlas whose entries are reused instead of recomputed

        Returns:
            Atlas with one entry per requested n
        """
        n_values = sorted(set(n_values))
        cached: Dict[int, List[Dict[str, Any]]] = {}
        todo = []
        for n in n_values:
            if existing is not None and n in existing:
                continue
            records = self._read_cached(n, tag)
            if records is not None:
                cached[n] = records
            else:
                todo.append(n)

        self.logger.info(f"Classifying {len(todo)} indices with {self.workers} workers")
        computed = await self.run_grid(classify_records, [(n, self.limits, tag) for n in todo])
        for n, records in zip(todo, computed):
            self._write_cached(n, tag, records)
            cached[n] = records

        atlas = Atlas.from_records(chain.from_iterable(cached[n] for n in n_values if n in cached))
        if existing is not None:
            for n in n_values:
                if n in existing:
                    atlas.reports[n] = existing.reports[n]
        unresolved = sum(len(atlas.unresolved(n)) for n in n_values)
        if unresolved:
            self.logger.warning(f"{unresolved} classes unresolved within the escalation cap")
        return atlas
