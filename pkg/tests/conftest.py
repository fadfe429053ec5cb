"""Shared fixtures.

The derived constants take a few seconds to compute, so they are built once
per session. Set WGNLS_CONSTANTS_CACHE to a JSON path to persist them across
runs (the CLI uses the same variable).
"""

import json
import os

import pytest

from wgnls.groundstate import GNConstants, compute_constants


@pytest.fixture(scope="session")
def consts() -> GNConstants:
    cache = os.environ.get("WGNLS_CONSTANTS_CACHE")
    if cache and os.path.exists(cache):
        with open(cache, "r", encoding="utf-8") as fh:
            return GNConstants.from_dict(json.load(fh))
    out = compute_constants()
    if cache:
        with open(cache, "w", encoding="utf-8") as fh:
            json.dump(out.to_dict(), fh, indent=2, sort_keys=True)
    return out
