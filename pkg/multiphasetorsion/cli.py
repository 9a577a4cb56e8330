"""
``multiphase-torsion`` command line.

Exit codes: 0 on success, 2 for invalid input, 3 for numerical failures and 1
for anything else.

.. code-block:: bash

    multiphase-torsion spectrum --R 0.5 --sigma1 2 --kmax 8 --out spectrum.csv
    multiphase-torsion construct --config demo.json
    multiphase-torsion --json verify --config out/verify.json
"""
import logging
import os
import sys
import time
from typing import List, Optional

import numpy as np

from multiphasetorsion import __version__
from multiphasetorsion.commands import CommandConsumer
from multiphasetorsion.config import ExperimentConfig, _positive_int
from multiphasetorsion.constructor import ConstructionParams, construct, export
from multiphasetorsion.decorators import argument, command
from multiphasetorsion.dtn import mode_gains, spectrum_table
from multiphasetorsion.fields import FourierField
from multiphasetorsion.layered_solver import solve
from multiphasetorsion.radial import PhaseConfig, collapse_chain, radial_solution
from multiphasetorsion.reports import emit_report, write_csv, write_json
from multiphasetorsion.settings import get_settings
from multiphasetorsion.shape_deriv import DEFAULT_EPSILONS, fd_validate
from multiphasetorsion.verify import check_overdetermined, rigidity_witness

logger = logging.getLogger(__name__)


class TorsionCommands(CommandConsumer):
    prog = "multiphase-torsion"
    description = f"Multi-phase torsion transmission problems ({__version__})."

    @command()
    @argument("--config", required=True, help="experiment JSON")
    @argument("--out-dir", help="output directory (default: the config's 'outputs')")
    def solve(self, options):
        """Solve a layered transmission problem and export its traces."""
        config = ExperimentConfig.load(options.config)
        settings = config.settings()
        geometry = config.layered_geometry()
        started = time.perf_counter()
        solution = solve(
            geometry,
            config.dirichlet_field(),
            jumps=config.jump_fields(),
            settings=settings,
        )
        logger.info(
            "Solved m=%d in %.3fs, residual %.3e",
            geometry.m,
            time.perf_counter() - started,
            solution.report.residual,
        )
        directory = config.output_dir(options.out_dir)
        write_json(os.path.join(directory, "solution.json"), solution.metadata())
        columns = [solution.grid(geometry.m - 1).nodes]
        for k in range(geometry.m):
            columns.append(solution.trace_values(k, 0, "inner")[1])
        write_csv(
            os.path.join(directory, "traces.csv"),
            ("theta",) + tuple(f"u_{k + 1}" for k in range(geometry.m)),
            zip(*columns),
            settings.CSV_DIGITS,
        )
        return solution.report.to_dict()

    @command()
    @argument("--R", dest="R", type=float, required=True, help="inner radius in (0, 1]")
    @argument("--sigma1", type=float, required=True)
    @argument("--kmax", type=int, default=8)
    @argument("--dimension", type=int, default=2)
    @argument("--out", help="CSV of k, closed form, numerical, relative error")
    @argument("--no-numerical", action="store_true", help="skip the collocation oracle")
    @argument(
        "--jump-radii", type=float, nargs="+", help="layers for jump-to-Neumann gains"
    )
    @argument("--jump-sigmas", type=float, nargs="+")
    @argument("--gains-out", help="CSV of k, g_k")
    def spectrum(self, options):
        """Dirichlet-to-Neumann eigenvalues and jump-to-Neumann gains."""
        settings = get_settings()
        kmax = _positive_int(options.kmax)
        rows = spectrum_table(
            options.R,
            options.sigma1,
            kmax,
            options.dimension,
            numerical=not options.no_numerical,
            settings=settings,
        )
        if options.out:
            write_csv(
                options.out,
                ("k", "mu_closed", "mu_numerical", "rel_err"),
                rows,
                settings.CSV_DIGITS,
            )
        summary = {"kmax": kmax}
        if not options.no_numerical and options.dimension == 2:
            summary["max_rel_err"] = max(r[3] for r in rows)
        if options.jump_radii:
            config = PhaseConfig(
                tuple(options.jump_radii), tuple(options.jump_sigmas or ())
            )
            gains = mode_gains(config, kmax)
            if options.gains_out:
                write_csv(
                    options.gains_out,
                    ("k", "g_k"),
                    enumerate(gains),
                    settings.CSV_DIGITS,
                )
            summary["gains"] = gains
        return summary

    @command(name="derive-check")
    @argument("--R", dest="R", type=float, default=0.5)
    @argument(
        "--R3", type=float, default=1.5, help="third radius (only fixes v_0's constant)"
    )
    @argument("--sigma1", type=float, default=2.0)
    @argument("--sigma3", type=float, default=3.0)
    @argument("--modes", type=int, nargs="+", default=[1, 2, 3, 4])
    @argument("--epsilons", type=float, nargs="+", default=list(DEFAULT_EPSILONS))
    @argument("--truncation", type=int)
    @argument("--out", help="JSON report")
    def derive_check(self, options):
        """Finite-difference check of the shape derivative of the flux map."""
        params = ConstructionParams.from_layers(
            (options.R, 1.0, options.R3),
            (options.sigma1, 1.0, options.sigma3),
            options.truncation,
        )
        reports = {}
        for k in options.modes:
            direction = FourierField.mode(_positive_int(k))
            report = fd_validate(direction, params, epsilons=options.epsilons)
            logger.info(
                "Mode %d: errors %s, orders %s", k, report.errors, report.orders
            )
            reports[k] = report
        if options.out:
            write_json(options.out, reports)
        return {
            f"order_{k}": report.orders[-1] if report.orders else None
            for k, report in reports.items()
        }

    @command()
    @argument(
        "--config", required=True, help="experiment JSON with a 'construction' block"
    )
    @argument("--out-dir", help="output directory (default: the config's 'outputs')")
    def construct(self, options):
        """Construct a non-radial configuration with constant normal derivatives."""
        config = ExperimentConfig.load(options.config)
        settings = config.settings()
        started = time.perf_counter()
        result = construct(config.eta(), config.construction_params(), settings)
        logger.info(
            "Constructed in %d iterations (%.3fs), residual %.3e",
            result.iterations,
            time.perf_counter() - started,
            result.residual,
        )
        paths = export(result, config.output_dir(options.out_dir), settings)
        return {
            "iterations": result.iterations,
            "residual": result.residual,
            "xi_sup_norm": result.xi.sup_norm(),
            "outputs": paths,
        }

    @command()
    @argument("--config", required=True, help="experiment JSON with a 'geometry' block")
    @argument("--orders", type=int, nargs="+")
    @argument("--out", help="JSON report")
    @argument("--traces", help="CSV of theta and (d_n)^k u")
    def verify(self, options):
        """Re-solve a geometry and measure its overdetermined conditions."""
        config = ExperimentConfig.load(options.config)
        settings = config.settings()
        geometry = config.layered_geometry()
        orders = options.orders or config.orders()
        report = check_overdetermined(geometry, orders, settings)
        emit_report(
            report, {"json": options.out, "csv": options.traces}, settings.CSV_DIGITS
        )
        summary = report.to_dict()
        if geometry.m == 2:
            summary["witness"] = rigidity_witness(geometry, settings=settings)
        return summary

    @command()
    @argument("--radii", type=float, nargs="+", required=True)
    @argument("--sigmas", type=float, nargs="+", required=True)
    @argument("--dimension", type=int, default=2)
    @argument("--out", help="CSV of stage, r, u, u', phase")
    def collapse(self, options):
        """Collapse the radial solution phase by phase down to one layer."""
        settings = get_settings()
        config = PhaseConfig(
            tuple(options.radii), tuple(options.sigmas), options.dimension
        )
        chain = collapse_chain(radial_solution(config))
        errors = []
        rows = []
        for stage, profile in enumerate(chain):
            reference = radial_solution(profile.config)
            samples = [row[0] for row in profile.to_rows()]
            errors.append(
                float(np.max(np.abs(profile.value(samples) - reference.value(samples))))
            )
            rows.extend((stage,) + row for row in profile.to_rows())
        if options.out:
            write_csv(
                options.out,
                ("stage", "r", "u", "du", "phase"),
                rows,
                settings.CSV_DIGITS,
            )
        return {
            "stages": len(chain),
            "errors": errors,
            "defects": [p.defect for p in chain],
        }


def run(argv: Optional[List[str]] = None) -> int:
    return TorsionCommands().run(argv)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
