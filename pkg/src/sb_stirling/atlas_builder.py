import asyncio
import logging
from pathlib import Path
from typing import Callable, Iterable, List, Optional, TypeVar, Union

from .atlas import Atlas
from .atlas_async import AsyncAtlasBuilder
from .zeros import ZeroLimits

T = TypeVar('T')
R = TypeVar('R')


class AtlasBuilder:
    """Synchronous wrapper for AsyncAtlasBuilder that provides a blocking interface."""

    def __init__(
        self,
        workers: int = 1,
        limits: Optional[ZeroLimits] = None,
        cache_dir: Optional[Union[str, Path]] = None,
        logger: Optional[logging.Logger] = None,
    ):
        """Initialize the sync wrapper for AsyncAtlasBuilder.

        Args:
            workers: Number of worker processes
            limits: Zero-finder limits
            cache_dir: Optional per-n atlas cache directory
            logger: Optional logger instance
        """
        self._async_builder = AsyncAtlasBuilder(workers, limits, cache_dir, logger)
        self.logger = self._async_builder.logger

    def __enter__(self) -> 'AtlasBuilder':
        """Context manager entry"""
        asyncio.run(self._async_builder.__aenter__())
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        """Context manager exit"""
        asyncio.run(self._async_builder.__aexit__(exc_type, exc_val, exc_tb))

    def close(self) -> None:
        """Shut down the worker pool"""
        asyncio.run(self._async_builder.close())

    @property
    def workers(self) -> int:
        return self._async_builder.workers

    @property
    def limits(self) -> ZeroLimits:
        return self._async_builder.limits

    def build_atlas(self, n_values: Iterable[int], tag: bool = True, existing: Optional[Atlas] = None) -> Atlas:
        """Classify every starting class for each n.

        Args:
            n_values: Indices to classify
            tag: Mark theorem-backed zeros
            existing: Atlas whose entries are reused

        Returns:
            Atlas with one entry per requested n
        """
        return asyncio.run(self._async_builder.build_atlas(n_values, tag, existing))

    def run_grid(self, func: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Apply a module-level function to every item, results in input order."""
        return asyncio.run(self._async_builder.run_grid(func, items))
