"""Smoke test for the onoff extension module.

Build and install first, e.g. `pip install ./crates/py` or
`maturin develop -m crates/py/Cargo.toml`.
"""

import math
import os
import tempfile

import onoff


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    lo, hi = onoff.distortion_bounds(4, 6)
    assert close(lo, 0.1875) and lo <= onoff.estimate_distortion(4, 6) <= hi

    book = onoff.Codebook.random(4, 6, seed=1)
    assert len(book) == 64 and book.dim == 4
    h = onoff.draw_channel(4, seed=3)
    norm = math.sqrt(sum(abs(x) ** 2 for x in h))
    index, codeword, alignment, loss = book.quantize([x / norm for x in h])
    assert 0 <= index < 64 and close(alignment + loss, 1.0)
    d = book.empirical_distortion(20000, seed=2)
    assert 0.1 < d < 0.35, d

    beams = onoff.zero_forcing_beams([book.entry(0), book.entry(1)])
    cross = sum(a.conjugate() * b for a, b in zip(book.entry(1), beams[0]))
    assert abs(cross) < 1e-8

    users = [onoff.UserProfile(1.0, 6) for _ in range(4)]
    report = onoff.SystemConfig(4, 20.0, users).choose_s()
    assert report["s_star"] == 1, report
    report = onoff.SystemConfig(4, 18.0, [onoff.UserProfile(1.0, 12)] * 4).choose_s()
    assert report["s_star"] == 3, report

    point = onoff.EtaDistribution([(1.0, 1.0)])
    assert close(point.spatial_efficiency(1.0, 0.5), 0.5)
    sbar, value = point.optimal_sbar(1.0)
    assert abs(sbar - 1 / math.e) < 1e-4, sbar

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "sweep.toml")
        with open(path, "w") as f:
            f.write(
                'L = 4\nm = 4\nrho_db = 20\ngamma = [1, 1, 1, 1]\nrate_bits = [6, 6, 6, 6]\n'
                'schemes = ["main_order", "fixed_s(4)"]\ntrials = 500\ncodebook_redraws = 2\n'
            )
        rows = onoff.simulate(path, seed=5)
        assert [r["scheme"] for r in rows] == ["main_order", "fixed_s(4)"]
        assert rows[0]["mc_throughput_bits"] > rows[1]["mc_throughput_bits"]
        assert rows == onoff.simulate(path, seed=5)

    try:
        onoff.UserProfile(-1.0, 3)
    except ValueError:
        pass
    else:
        raise AssertionError("negative gamma accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
