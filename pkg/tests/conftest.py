import hashlib
import os
import time
from pathlib import Path

import numpy as np
import pytest

from texweave.optimize import LossConfig, decompose
from texweave.pipeline import PipelineConfig, ablation_config
from texweave.project import load_image
from texweave.slic import slic_segment

DATA_DIR = Path(__file__).parent / "data"
CORPUS = ("astronaut", "chelsea", "hubble", "retina", "rocket")

# Optional disk cache for the expensive acceptance decompositions, for
# iterating on the suite. Off by default so a clean run exercises real code.
CACHE_DIR = Path(__file__).parent / ".cache"
USE_CACHE = os.environ.get("TEXWEAVE_TEST_CACHE") == "1"


@pytest.fixture(scope="session")
def corpus():
    return {name: load_image(DATA_DIR / f"{name}.png") for name in CORPUS}


def _run_key(name, segments, tv, disabled):
    tag = f"{name}-s{segments}-tv{tv}-dis{','.join(sorted(disabled))}"
    return hashlib.sha1(tag.encode()).hexdigest()[:16], tag


@pytest.fixture(scope="session")
def decompose_cache(corpus):
    """Memoized 100-iteration decompositions shared by the acceptance tests."""
    memo = {}

    def run(name, segments=1000, tv=0.2, disabled=()):
        key = (name, segments, tv, tuple(sorted(disabled)))
        if key in memo:
            return memo[key]
        digest, tag = _run_key(name, segments, tv, disabled)
        cache_file = CACHE_DIR / f"{digest}.npz"
        image = corpus[name]
        cfg = PipelineConfig()
        for f in disabled:
            cfg = ablation_config(f, cfg)
        if USE_CACHE and cache_file.exists():
            blob = np.load(cache_file, allow_pickle=True)
            masks_latents = {k[2:]: blob[k] for k in blob.files
                             if k.startswith("z_")}
            from texweave.pipeline import ParameterMaskSet, DEFAULT_RANGES
            masks = ParameterMaskSet(latents=masks_latents,
                                     ranges=dict(DEFAULT_RANGES))
            result = {"masks": masks, "trace": blob["trace"].tolist(),
                      "seg": None, "image": image, "cfg": cfg, "tag": tag,
                      "seconds": None}
            memo[key] = result
            return result
        started = time.perf_counter()
        seg = slic_segment(image, segments)
        masks, trace = decompose(image, seg, cfg=cfg,
                                 loss_cfg=LossConfig(lambda_tv=tv))
        seconds = time.perf_counter() - started
        if USE_CACHE:
            CACHE_DIR.mkdir(exist_ok=True)
            np.savez(cache_file, trace=np.asarray(trace, dtype=object),
                     **{f"z_{k}": v for k, v in masks.latents.items()})
        result = {"masks": masks, "trace": trace, "seg": seg,
                  "image": image, "cfg": cfg, "tag": tag, "seconds": seconds}
        memo[key] = result
        return result

    return run


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
