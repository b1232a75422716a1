import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

from optstab_figures import (
    COLOR_RGB,
    SchemaError,
    read_sweep_csv,
    read_trajectory_csv,
    render_region,
    render_trajectory,
)
from optstab_figures.render import BACKGROUND_RGB, main

REGION_HEADER = "param1,param2,kingma,ours,converged,color\n"


@pytest.fixture(scope="session")
def exp1_csv(tmp_path_factory):
    """exp1 sweep at reduced resolution, produced through the CLI contract."""
    path = tmp_path_factory.mktemp("data") / "exp1.csv"
    res = subprocess.run(
        [sys.executable, "-m", "optstab", "sweep", "--preset", "exp1",
         "--resolution", "20", "15", "-o", str(path)],
        capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    return path


@pytest.fixture(scope="session")
def fig2_csv(tmp_path_factory):
    """Convergent reference trajectory, produced through the CLI contract."""
    path = tmp_path_factory.mktemp("data") / "fig2.csv"
    res = subprocess.run(
        [sys.executable, "-m", "optstab", "trajectory",
         "--family", "adam", "--alpha", "0.01", "--epsilon", "0.01",
         "--beta1", "0.9", "--beta2", "0.99", "--objective", "quad1d",
         "--w0", "4", "--t-max", "10000", "-o", str(path)],
        capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    return path


def test_region_pixel_histogram_only_classification_colors(exp1_csv, tmp_path):
    out = tmp_path / "exp1.png"
    render_region(str(exp1_csv), str(out))
    img = np.asarray(Image.open(out).convert("RGB"))
    seen = {tuple(int(v) for v in px)
            for px in img.reshape(-1, 3)}
    allowed = set(COLOR_RGB.values()) | {BACKGROUND_RGB}
    assert seen <= allowed
    assert len(seen & set(COLOR_RGB.values())) >= 2  # several regions visible
    assert (out.parent / (out.name + ".legend.png")).exists()


def test_region_geometry_matches_grid(exp1_csv, tmp_path):
    table = read_sweep_csv(str(exp1_csv))
    out = tmp_path / "exp1.png"
    render_region(str(exp1_csv), str(out), scale=3, border=2)
    img = Image.open(out)
    assert img.size == (20 * 3 + 4, 15 * 3 + 4)
    assert table.colors.shape == (20, 15)


def test_region_schema_errors(tmp_path):
    bad_header = tmp_path / "bad1.csv"
    bad_header.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(SchemaError):
        read_sweep_csv(str(bad_header))

    bad_color = tmp_path / "bad2.csv"
    bad_color.write_text(REGION_HEADER + "1,2,true,true,true,purple\n")
    with pytest.raises(SchemaError):
        read_sweep_csv(str(bad_color))

    not_grid = tmp_path / "bad3.csv"
    not_grid.write_text(REGION_HEADER
                        + "1,1,true,true,true,green\n"
                        + "1,2,true,true,true,green\n"
                        + "2,1,true,true,true,green\n")
    with pytest.raises(SchemaError):
        read_sweep_csv(str(not_grid))

    empty = tmp_path / "bad4.csv"
    empty.write_text(REGION_HEADER)
    with pytest.raises(SchemaError):
        read_sweep_csv(str(empty))


def test_trajectory_envelope_monotone_decreasing(fig2_csv, tmp_path):
    out = tmp_path / "fig2.png"
    data = render_trajectory(str(fig2_csv), str(out))
    assert out.exists() and Image.open(out).size[0] > 0
    env = data.envelope
    assert np.all(np.diff(env) <= 0)          # monotone non-increasing
    assert env[-1] < 1e-6 and env[0] == 4.0   # converged from |w0| = 4
    assert np.all(data.dist <= env + 1e-300)


def test_trajectory_schema_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(SchemaError):
        read_trajectory_csv(str(bad))
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("t,w_0,dist_to_min\n0,1\n")
    with pytest.raises(SchemaError):
        read_trajectory_csv(str(ragged))


def test_cli_exit_codes(exp1_csv, tmp_path):
    out = tmp_path / "r.png"
    assert main(["--kind", "region", "--in", str(exp1_csv),
                 "--out", str(out)]) == 0
    assert out.exists()
    bad = tmp_path / "bad.csv"
    bad.write_text("nope\n")
    assert main(["--kind", "region", "--in", str(bad),
                 "--out", str(tmp_path / "x.png")]) == 2
    assert main(["--kind", "trajectory", "--in", str(tmp_path / "missing.csv"),
                 "--out", str(tmp_path / "y.png")]) == 2
