"""Engine selection: compiled hot path with a pure-Python fallback.

The simulation inner loop dominates runtime on congested scenarios
(tens of millions of events per virtual minute), so a Cython twin of
netsim ships as fadelink._fastsim. Both engines implement the identical
deterministic contract and return identical counters and traces; the
test suite compares them directly. "auto" picks the compiled engine
when the extension was built, else the pure one.
"""

from __future__ import annotations

from . import netsim

try:
    from . import _fastsim
except ImportError:  # extension not built; pure Python still works
    _fastsim = None

ENGINES = ("auto", "fast", "pure")


def have_fast() -> bool:
    return _fastsim is not None


def engine_name(name: str = "auto") -> str:
    if name == "auto":
        return "fast" if _fastsim is not None else "pure"
    return name


def get_simulate(name: str = "auto"):
    """Return the simulate() callable for the requested engine."""
    resolved = engine_name(name)
    if resolved == "pure":
        return netsim.simulate
    if resolved == "fast":
        if _fastsim is None:
            raise RuntimeError(
                "fast engine requested but fadelink._fastsim is not built; "
                "reinstall with a C compiler or use engine='pure'"
            )
        return _fastsim.simulate
    raise ValueError(f"unknown engine {name!r}; expected one of {ENGINES}")
