"""Round trip through the command line: write inputs, fit, export.

Everything goes to a temporary directory whose path is printed at the
end, so the files can be inspected with any CSV viewer.

    python demos/fit_and_export.py
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from haarsel.cli import main as haarsel
from haarsel.formats import read_grid, write_grid, write_points
from haarsel.simulate import GrfSpec, Window, calibrate_intercept, simulate_grfs, simulate_ipp


def main() -> None:
    root = Path(tempfile.mkdtemp(prefix="haarsel_demo_"))
    win = Window(0, 10, 0, 10)
    covs = simulate_grfs(GrfSpec(resolution=(32, 32), seed=21, window=win), 3)
    # the slope effect flips sign between the west and east halves
    x = covs[1].center_points()[:, 0].reshape(32, 32)
    eta = covs[0].values + np.where(x < 5, 1.0, -1.0) * covs[1].values
    b0 = calibrate_intercept(400.0, covs[0].map(lambda _: eta))
    pattern = simulate_ipp(covs[0].map(lambda _: np.exp(b0 + eta)), seed=22)

    write_points(root / "points.csv", pattern)
    (root / "grids").mkdir()
    for name, img in zip(("elev", "slope", "noise"), covs):
        write_grid(root / "grids" / f"{name}.csv", img)
    print(f"{pattern.n} events written to {root / 'points.csv'}")

    code = haarsel(["fit", str(root / "points.csv"), str(root / "grids"), "--J", "2",
                    "--criterion", "bic", "--out", str(root / "fit")])
    sel = json.loads((root / "fit" / "selection.json").read_text())
    print(f"fit exit code {code}; selected {sel['global_active']} at lambda index {sel['lambda_index']}")
    print((root / "fit" / "coefficients.csv").read_text())

    haarsel(["export", str(root / "fit"), "--grid", "8"])
    for surf in sorted((root / "fit" / "export" / "surfaces").iterdir()):
        vals = read_grid(surf).values
        print(f"{surf.stem}: west mean {vals[:, :4].mean():+.2f}, east mean {vals[:, 4:].mean():+.2f}")
    print(f"\nall files under {root}")


if __name__ == "__main__":
    main()
