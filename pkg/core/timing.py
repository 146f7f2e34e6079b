"""
core/timing.py - Timing and progress output for the pipeline scripts.

Provides:
  - format_duration  compact duration string
  - StageTimer       context manager timing one named stage
  - ProgressBar      single-line replicate counter with ETA
  - RunReport        per-stage timing table printed at the end of a command

Everything prints to stdout so it interleaves with the scripts' log lines.
"""

import sys
import time


def format_duration(seconds: float) -> str:
    """
    Examples
    --------
    >>> format_duration(0.4)
    '0.4s'
    >>> format_duration(75)
    '1m 15s'
    >>> format_duration(3725)
    '1h 2m 5s'
    """
    seconds = max(0.0, seconds)
    if seconds < 60:
        return f"{seconds:.1f}s"
    minutes, secs = divmod(int(seconds), 60)
    if minutes < 60:
        return f"{minutes}m {secs}s"
    hours, mins = divmod(minutes, 60)
    return f"{hours}h {mins}m {secs}s"


class StageTimer:
    """
    Wall-clock timer for one stage of a command.

    ::

        with StageTimer("Build arrangement") as t:
            graph = build(sample)
        report.record(t.name, t.elapsed)

    ``quiet=True`` suppresses the line printed on exit.
    """

    def __init__(self, name: str, quiet: bool = False) -> None:
        self.name = name
        self.quiet = quiet
        self.elapsed: float = 0.0
        self._start: float = 0.0

    def start(self) -> "StageTimer":
        self._start = time.perf_counter()
        return self

    def stop(self) -> float:
        self.elapsed = time.perf_counter() - self._start
        if not self.quiet:
            print(f"  {self.name}: {format_duration(self.elapsed)}", flush=True)
        return self.elapsed

    def __enter__(self) -> "StageTimer":
        return self.start()

    def __exit__(self, *_) -> None:
        self.stop()


class ProgressBar:
    """
    Overwriting progress line for replicate loops.

    Parameters
    ----------
    total:       Number of replicates.
    label:       Short label shown before the bar.
    width:       Width of the bar section.
    print_every: Redraw every N replicates.
    enabled:     False turns every call into a no-op (library use, tests).
    """

    def __init__(
        self,
        total: int,
        label: str = "Replicates",
        width: int = 30,
        print_every: int = 1,
        enabled: bool = True,
    ) -> None:
        self.total = max(1, total)
        self.label = label
        self.width = width
        self.print_every = max(1, print_every)
        self.enabled = enabled
        self._start = time.perf_counter()
        self._last = -1
        self._closed = False

    def update(self, done: int) -> None:
        if not self.enabled or self._closed:
            return
        if done != self.total and done - self._last < self.print_every:
            return
        self._last = done
        elapsed = time.perf_counter() - self._start
        frac = done / self.total
        filled = int(self.width * frac)
        rate = done / elapsed if elapsed > 0 else 0.0
        eta = f" ETA {format_duration((self.total - done) / rate)}" if 0 < rate and done < self.total else ""
        line = f"\r  {self.label}: [{'=' * filled}{'-' * (self.width - filled)}] {done}/{self.total}{eta}"
        sys.stdout.write(line.ljust(78) + "\r")
        sys.stdout.flush()

    def close(self) -> float:
        if self._closed:
            return 0.0
        self._closed = True
        elapsed = time.perf_counter() - self._start
        if self.enabled:
            sys.stdout.write("\r" + " " * 79 + "\r")
            print(f"  {self.label}: {self.total} in {format_duration(elapsed)}", flush=True)
        return elapsed

    def __enter__(self) -> "ProgressBar":
        return self

    def __exit__(self, *_) -> None:
        self.close()


class RunReport:
    """Collects stage timings and the files a command wrote; prints both."""

    def __init__(self, title: str) -> None:
        self.title = title
        self.stages: list[tuple[str, float]] = []
        self.outputs: list[str] = []
        self._wall_start = time.perf_counter()

    def record(self, name: str, elapsed: float) -> None:
        self.stages.append((name, elapsed))

    def wrote(self, path) -> None:
        self.outputs.append(str(path))

    def print(self) -> None:
        total = time.perf_counter() - self._wall_start
        sep = "=" * 55
        print(f"\n{sep}")
        print(f"  {self.title} - timing summary")
        print(sep)
        measured = sum(e for _, e in self.stages)
        for name, elapsed in self.stages:
            share = elapsed / measured * 100 if measured > 0 else 0
            print(f"  {name:<28} {format_duration(elapsed):>8}  {'#' * int(share / 5)}")
        print(sep)
        print(f"  {'Total wall time':<28} {format_duration(total):>8}")
        for path in self.outputs:
            print(f"  wrote {path}")
        print(sep)
