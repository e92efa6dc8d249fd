"""
Several starting points, with figures
=====================================

Runs the bundled sweep through the command line entry point and writes
SVG figures for the nominal run. Everything lands in ``demo_out/``.
"""

from importlib import resources

from ibvsquad.cli import main

# the sweep file refers to the bundled nominal scenario by name
with resources.as_file(resources.files("ibvsquad") / "scenarios" / "sweep.json") as path:
    code = main(["sweep", str(path), "--out", "demo_out/sweep"])
print("sweep exit code", code)

code = main(["run", "nominal", "--out", "demo_out/nominal", "--plots"])
print("run exit code", code)
