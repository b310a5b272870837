"""Corruption synthesis and the training mix policy.

Sweeps the fog levels and low-light exponents, then draws from the seeded
mix policy to show the one-third fog / one-third low-light / one-third clean
loading behavior.
"""

from collections import Counter
from pathlib import Path

import numpy as np

from ttadapt.corruption import (FogParams, LowLightParams, MixPolicy,
                                depth_proxy, sample_corruption, synthesize_fog,
                                synthesize_low_light)
from ttadapt.dataset import _smooth_background, _spawn_objects, render_frame
from ttadapt.io import write_image

OUT = Path(__file__).parent / "output"


def main():
    rng = np.random.default_rng(11)
    background = _smooth_background(rng, 96, 96)
    clean, _ = render_frame(background, _spawn_objects(rng, 96, 96, 3))
    write_image(OUT / "mix_clean.png", clean)

    depth = depth_proxy(96, 96)
    print(f"Radial depth proxy on 96x96: center {depth[48, 48]:.2f}, "
          f"corner {depth[0, 0]:.2f} (fog thickens toward the center)")

    print("\nFog levels map to scattering coefficients beta = 0.01*level + 0.05:")
    for level in (0, 5, 9):
        params = FogParams(level=level)
        foggy = synthesize_fog(clean, params)
        print(f"  level {level}: beta={params.beta:.2f}, "
              f"mean |I - 0.5| = {np.abs(foggy - 0.5).mean():.3f} "
              f"(clean: {np.abs(clean - 0.5).mean():.3f})")
        write_image(OUT / f"mix_fog_{level}.png", foggy)

    print("\nLow light raises channels to a power in [1.5, 5]:")
    for exponent in (1.5, 3.0, 5.0):
        dark = synthesize_low_light(clean, LowLightParams(exponent=exponent))
        print(f"  exponent {exponent}: mean {dark.mean():.3f} "
              f"(clean: {clean.mean():.3f})")
        write_image(OUT / f"mix_lowlight_{exponent}.png", dark)

    policy = MixPolicy(rng_seed=2024)
    gen = np.random.default_rng(policy.rng_seed)
    counts = Counter()
    draws = 30000
    for _ in range(draws):
        kind, _params = sample_corruption(policy, float(gen.random()), gen)
        counts[kind] += 1
    print(f"\n{draws} seeded draws from the mix policy:")
    for kind in ("fog", "lowlight", "clean"):
        print(f"  {kind:9s} {counts[kind] / draws:.4f}  (target 0.3333)")
    print(f"\nImages written to {OUT}/")


if __name__ == "__main__":
    main()
