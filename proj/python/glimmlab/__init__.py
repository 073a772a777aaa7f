"""Dict-level wrappers around the compiled _core module.

Every _core call speaks JSON text (the same serialization the command-line
tool writes), so these helpers only parse/serialize at the boundary.
"""

import json

from _core import (  # noqa: F401
    BadConfig,
    SolverError,
    vdc,
)
import _core


def riemann(model, ul, ur, params=None):
    """Solve one Riemann problem; returns the fan report as a dict."""
    return json.loads(_core.riemann(model, list(ul), list(ur), _dump(params)))


def merge(model, ul, um, ur, params=None):
    """Interaction ledger of two merging Riemann problems, as a dict."""
    return json.loads(
        _core.merge(model, list(ul), list(um), list(ur), _dump(params))
    )


def run(config):
    """Run the scheme from a config dict; returns the trace as a dict."""
    return json.loads(_core.run(json.dumps(config)))


def verify(trace):
    """Decay report of a finished trace dict, as a dict."""
    return json.loads(_core.verify(json.dumps(trace)))


def packages_csv(trace):
    """Wave-package genealogy of a trace dict, as CSV text."""
    return _core.packages_csv(json.dumps(trace))


def functionals_csv(trace):
    """Per-layer functional series of a trace dict, as CSV text."""
    return _core.functionals_csv(json.dumps(trace))


def _dump(params):
    return "" if params is None else json.dumps(params)
