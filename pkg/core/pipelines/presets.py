import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from core.entropy.approximation import run_approximation_chain
from core.entropy.certificate import entropy_certify, entropy_tolerance, make_test_set, smooth_bump
from core.entropy.estimates import affine_fit, truncation_energy
from core.free_boundary.coincidence import (
    coincidence_set,
    default_eps,
    locality_check,
    reconstruct_beta,
    strict_interior,
    xi_field,
    zero_obstacle_beta,
)
from core.free_boundary.lewy_stampacchia import lewy_stampacchia_check
from core.free_boundary.regularity import holder_modulus
from core.free_boundary.stability import (
    StabilityReport,
    chi_convergence,
    contraction_check,
    obstacle_family,
    stability_check,
)
from core.grid.grid import RegionMask, ScalarField, measure
from core.operator.assembly import apply_a
from core.operator.audit import audit_structure
from core.operator.flux import FluxSpec
from core.pipelines.base_pipeline import Pipeline
from core.pipelines.config import ConfigError
from core.pipelines.expressions import build_exponent, build_flux, build_grid, build_problem
from core.solver.lcp import projected_sor
from core.solver.problem import ObstacleProblem
from core.solver.vi_solver import solve_unconstrained
from core.varexp.exponent import derived_exponents, validate_exponent
from core.varexp.spaces import default_t_levels
from infrastructure.storage.artifacts import Column
from schema import ExponentKind, PresetName

HOLDER_EXPONENTS = (0.25, 0.5, 0.75, 1.0)
CONTRACTION_SLACK = 1e-8
EQUATION_RESIDUAL_FACTOR = 1e-6
IN_MEASURE_REDUCTION = 1.0 / 3.0
MARCINKIEWICZ_SPREAD = 1.1
MODULAR_VARIATION = 0.25
MIN_OBSERVED_ORDER = 1.8
# manufactured data are sampled from the operator on a grid this many times finer
MANUFACTURED_REFINEMENT = 8
PERTURBATION_BUMPS = 3


class SolvePipeline(Pipeline):
    """Solve once; write u, Au and the coincidence mask"""

    columns = [
        Column("nodes", "1", "grid size", "discrete obstacle problem"),
        Column("iterations", "sweeps", "symmetric PGS sweeps", "discrete obstacle problem"),
        Column("newton_steps", "1", "warm-start steps", "discrete obstacle problem"),
        Column("residual", "f", "max |min(u - psi, Au - f)|", "complementarity system"),
        Column("tol", "f", "complementarity tolerance", "complementarity system"),
        Column("converged", "bool", "residual <= tol", "discrete obstacle problem"),
        Column("contact_measure", "length^N", "meas{u = psi}", "discrete obstacle problem"),
        Column("u_sup", "u", "max |u|", "discrete obstacle problem"),
    ]

    def run(self):
        problem = build_problem(self.config)
        report = self.solve(problem)
        contact = coincidence_set(report.u, problem.psi, self.config.run.eps, report.tol)

        self.write_field("u.field", report.u)
        self.write_field("au.field", report.au)
        self.write_field("coincidence.field", report.u.with_values(contact.mask.astype(float)))
        self.write_table("solve.csv", self.columns, [[
            problem.grid.size,
            report.iterations,
            report.newton_steps,
            report.complementarity_residual,
            report.tol,
            report.converged,
            measure(contact),
            report.u.max_abs(),
        ]])
        self.write_table(
            "holder.csv",
            [
                Column("alpha", "1", "Hoelder exponent", "Hoelder regularity of u"),
                Column("modulus", "u / length^alpha", "max |u_i - u_j| / h^alpha", "Hoelder regularity of u"),
            ],
            holder_modulus(report.u, HOLDER_EXPONENTS),
        )
        self.record_check("complementarity_residual", report.complementarity_residual, report.tol, report.converged)

        spec = problem.spec
        if spec.p.is_constant() and spec.p.p_min == 2.0:
            u_lcp, sweeps = projected_sor(problem)
            gap = float(np.max(np.abs(u_lcp.values - report.u.values)))
            self.record_check("lcp_agreement", gap, EQUATION_RESIDUAL_FACTOR * problem.scale, gap <= EQUATION_RESIDUAL_FACTOR * problem.scale, sor_sweeps=sweeps)

        self.write_summary("solve_summary.txt", {**report.summary(), "contact_measure": measure(contact)})


class LSAuditPipeline(Pipeline):
    """Lewy-Stampacchia bounds away from free-boundary collars"""

    columns = [
        Column("lower_violation", "f", "max (f - Au)^+", "Lewy-Stampacchia inequality"),
        Column("upper_violation", "f", "max (Au - f - (A psi - f)^+)^+", "Lewy-Stampacchia inequality"),
        Column("tolerance", "f", "pass threshold", "Lewy-Stampacchia inequality"),
        Column("lower_ok", "bool", "f <= Au", "Lewy-Stampacchia inequality"),
        Column("upper_ok", "bool", "Au <= f + (A psi - f)^+", "Lewy-Stampacchia inequality"),
        Column("collar_lower_violation", "f", "inside collars, advisory", "Lewy-Stampacchia inequality"),
        Column("collar_upper_violation", "f", "inside collars, advisory", "Lewy-Stampacchia inequality"),
        Column("excluded_nodes", "1", "collar nodes", "Lewy-Stampacchia inequality"),
        Column("in_hypotheses", "bool", "exponent regime covered by the bound", "Lewy-Stampacchia inequality"),
    ]

    def run(self):
        problem = build_problem(self.config)
        report = self.solve(problem)
        ls = lewy_stampacchia_check(problem, report.u, tol=self.config.run.ls_tol, eps=self.config.run.eps)

        self.write_table("ls_report.csv", self.columns, [[
            ls.lower_violation,
            ls.upper_violation,
            ls.tolerance,
            ls.lower_ok,
            ls.upper_ok,
            ls.collar_lower_violation,
            ls.collar_upper_violation,
            ls.excluded_nodes,
            ls.in_hypotheses,
        ]])
        self.record_check("ls_lower", ls.lower_violation, ls.tolerance, ls.lower_ok, in_hypotheses=ls.in_hypotheses)
        self.record_check("ls_upper", ls.upper_violation, ls.tolerance, ls.upper_ok, in_hypotheses=ls.in_hypotheses)
        self.write_summary("ls_summary.txt", ls.model_dump())


class EquationAuditPipeline(Pipeline):
    """Au + beta = f away from collars, the sign of xi and the entropy inequality"""

    columns = [
        Column("strict_residual", "f", "max |Au + beta - f| off collars", "equation Au + beta = f"),
        Column("threshold", "f", "1e-6 scale", "equation Au + beta = f"),
        Column("strict_nodes", "1", "nodes checked", "equation Au + beta = f"),
        Column("contact_measure", "length^N", "meas{u = psi}", "equation Au + beta = f"),
        Column("xi_max", "f", "max (f - Au), <= tol", "sign and support of xi"),
        Column("xi_off_contact", "f", "max |f - Au| where u - psi > tol, <= tol", "sign and support of xi"),
        Column("locality", "f", "max |Au - A psi| where u = psi on the stencil", "locality of A on contact sets"),
        Column("zero_obstacle_gap", "f", "max |beta - (-f^- chi_{u=0})| off collars, psi = 0 only", "zero-obstacle form of beta"),
    ]
    entropy_columns = [
        Column("test_function", "-", "phi", "entropy inequality"),
        Column("t", "u", "truncation level", "entropy inequality"),
        Column("lhs", "f u length^N", "sum a(grad u).grad T_t(phi - u)", "entropy inequality"),
        Column("rhs", "f u length^N", "integral f T_t(phi - u)", "entropy inequality"),
        Column("margin", "f u length^N", "lhs - rhs", "entropy inequality"),
        Column("tolerance", "f u length^N", "1e-6 (1 + |f|_1)(1 + t)", "entropy inequality"),
    ]

    def run(self):
        run = self.config.run
        problem = build_problem(self.config)
        report = self.solve(problem)
        u = report.u

        beta = reconstruct_beta(problem, u, eps=run.eps, tol=report.tol)
        xi = xi_field(problem, u)
        threshold = EQUATION_RESIDUAL_FACTOR * problem.scale
        xi_max = float(np.max(xi.values[problem.grid.interior_mask]))
        off_contact = problem.grid.interior_mask & ~beta.contact.mask & (u.values - problem.psi.values > report.tol)
        xi_off = float(np.max(np.abs(xi.values[off_contact]))) if np.any(off_contact) else 0.0

        eps = default_eps(problem.grid, report.tol) if run.eps is None else run.eps
        locality = locality_check(problem.spec, u, problem.psi, eps)
        zero_gap = math.nan
        if not np.any(problem.psi.values != 0.0):
            keep = strict_interior(beta.contact).mask
            zero_beta = zero_obstacle_beta(problem, u, run.eps)
            difference = np.abs(zero_beta.values - beta.beta.values)[keep]
            zero_gap = float(np.max(difference)) if difference.size else 0.0

        self.write_field("beta.field", beta.beta)
        self.write_field("xi.field", xi)
        self.write_table("equation_report.csv", self.columns, [[
            beta.strict_residual, threshold, beta.strict_nodes, measure(beta.contact), xi_max, xi_off, locality, zero_gap,
        ]])
        self.record_check("equation_residual", beta.strict_residual, threshold, beta.strict_residual <= threshold)
        self.record_check("xi_sign", xi_max, report.tol, xi_max <= report.tol)
        self.record_check("xi_off_contact", xi_off, report.tol, xi_off <= report.tol, nodes=int(np.count_nonzero(off_contact)))

        self._certify(problem, u)

    def _certify(self, problem: ObstacleProblem, u: ScalarField):
        run = self.config.run
        test_set = make_test_set(problem, u, run.test_count, run.seed)
        certificates = entropy_certify(problem, u, test_set, run.t_levels)
        rows = []
        worst = math.inf
        for certificate in certificates:
            tolerance = entropy_tolerance(problem, certificate.t)
            worst = min(worst, certificate.margin + tolerance)
            rows.append([certificate.test_function_id, certificate.t, certificate.lhs, certificate.rhs, certificate.margin, tolerance])
        self.write_table("entropy.csv", self.entropy_columns, rows)
        self.record_check("entropy_margin", worst, 0.0, worst >= 0.0, certificates=len(certificates))


class ChainPipeline(Pipeline):
    """Approximation chain T_n(f): convergence in measure and uniform a-priori bounds"""

    columns = [
        Column("n", "f", "truncation level of the data", "approximation chain"),
        Column("iterations", "sweeps", "symmetric PGS sweeps", "approximation chain"),
        Column("residual", "f", "complementarity residual", "approximation chain"),
        Column("converged", "bool", "residual <= tol", "approximation chain"),
        Column("in_measure", "length^N", "meas{|u_n - u_prev| > s}", "convergence in measure"),
        Column("modular_u", "length^N", "integral |u_n|^(0.95 q0)", "a-priori modular estimate"),
        Column("modular_grad", "length^N", "sum w_f |g_f|^(0.95 q1)", "a-priori modular estimate"),
        Column("marcinkiewicz_M", "length^N", "max_t integral_{|u|>t} t^(0.95 q0)", "weak Lebesgue estimate"),
        Column("marcinkiewicz_grad_M", "length^N", "weak-Lebesgue bound of the gradient", "weak Lebesgue estimate"),
    ]

    def run(self):
        run = self.config.run
        solver = self.config.solver
        problem = build_problem(self.config)
        chain = run_approximation_chain(
            problem.spec,
            problem.f,
            problem.psi,
            run.chain_levels,
            s=run.s,
            tol=solver.tol,
            max_iter=solver.max_iter,
            method=solver.method,
            t_levels=run.t_levels,
            workers=run.workers,
        )
        for n, report in zip(chain.levels, chain.reports):
            self.note_convergence(report, f"chain n={n:g}")

        rows = chain.rows
        self.write_table("chain.csv", self.columns, [[
            row.n, row.iterations, row.residual, row.converged, row.in_measure,
            row.modular_u, row.modular_grad, row.marcinkiewicz_m, row.marcinkiewicz_grad_m,
        ] for row in rows])

        self._check_in_measure(chain.distances())
        self._check_uniform_bounds(rows)
        self._check_truncation_energy(problem, chain.reports[-1].u)

    def _check_in_measure(self, distances: List[float]):
        """
        Consecutive in-measure distances must strictly decrease.

        For bounded data every level above sup|f| leaves the data unchanged, so
        the distance reaches 0 and stays there. Such 0 -> 0 steps are counted as
        ``stalled_at_zero`` and are neither decreases nor increases.
        """
        if not distances:
            self.logger.info("A single chain level: no in-measure distances")
            return
        steps = list(zip(distances, distances[1:]))
        stalled = sum(1 for previous, current in steps if previous == 0.0 and current == 0.0)
        increases = sum(1 for previous, current in steps if current >= previous) - stalled
        if stalled:
            self.logger.info(f"{stalled} chain steps stalled at zero distance")
        self.record_check(
            "in_measure_decreasing", increases, 0, increases == 0,
            distances=list(distances), strict_decreases=len(steps) - increases - stalled, stalled_at_zero=stalled,
        )
        if len(distances) > 1:
            ratio = distances[-1] / distances[0] if distances[0] > 0 else 0.0
            self.record_check("in_measure_reduction", ratio, IN_MEASURE_REDUCTION, ratio <= IN_MEASURE_REDUCTION)

    def _check_uniform_bounds(self, rows):
        if any(math.isnan(row.marcinkiewicz_m) for row in rows):
            self.logger.info("Modular diagnostics unavailable for sup p >= N; uniform-bound checks skipped")
            return
        densest = rows[-1].marcinkiewicz_m
        spread = max(row.marcinkiewicz_m for row in rows) / densest if densest > 0 else 1.0
        self.record_check("marcinkiewicz_uniform", spread, MARCINKIEWICZ_SPREAD, spread <= MARCINKIEWICZ_SPREAD)

        top = rows[len(rows) // 2:]
        variation = 0.0
        for values in ([row.modular_u for row in top], [row.modular_grad for row in top]):
            largest = max(values)
            if largest > 0:
                variation = max(variation, (largest - min(values)) / largest)
        self.record_check("modular_variation", variation, MODULAR_VARIATION, variation < MODULAR_VARIATION)

    def _check_truncation_energy(self, problem: ObstacleProblem, u: ScalarField):
        levels = default_t_levels(u.values, self.config.run.t_count)
        table = truncation_energy(problem.spec, u, levels)
        self.write_table(
            "truncation_energy.csv",
            [
                Column("t", "u", "truncation level", "truncation energy estimate"),
                Column("energy", "length^N", "sum over {|u| <= t} of w_f |g_f|^p_f", "truncation energy estimate"),
            ],
            table,
        )
        energies = [energy for _, energy in table]
        drops = sum(1 for a, b in zip(energies, energies[1:]) if b < a)
        self.record_check("truncation_energy_monotone", drops, 0, drops == 0)
        if len(table) >= 2:
            fit = affine_fit(table)
            self.record_check("truncation_energy_affine", fit.slope, math.inf, math.isfinite(fit.slope), intercept=fit.intercept)


def _perturbed_data(problem: ObstacleProblem, rng: np.random.Generator) -> ScalarField:
    """f plus a few seeded smooth bumps of either sign, scaled by 1 + sup|f|"""
    grid = problem.grid
    size = min(grid.extent)
    amplitude = 1.0 + problem.f_sup
    values = np.array(problem.f.values)
    for _ in range(PERTURBATION_BUMPS):
        center = [rng.uniform(0.0, length) for length in grid.extent]
        width = rng.uniform(0.05, 0.3) * size
        height = rng.uniform(-1.0, 1.0) * amplitude
        values = values + smooth_bump(grid, center, width, height).values
    return problem.f.with_values(values)


class ContractionPipeline(Pipeline):
    """L1 contraction over seeded random data pairs sharing the obstacle"""

    columns = [
        Column("pair", "1", "pair index", "L1 contraction"),
        Column("l1_data_distance", "f length^N", "|f1 - f2|_1", "L1 contraction"),
        Column("l1_xi_distance", "f length^N", "|xi1 - xi2|_1", "L1 contraction"),
        Column("slack", "f length^N", "|f1 - f2|_1 + 1e-8 - |xi1 - xi2|_1", "L1 contraction"),
        Column("passed", "bool", "slack >= 0", "L1 contraction"),
    ]

    def run(self):
        run = self.config.run
        base = build_problem(self.config)
        rng = np.random.default_rng(run.seed)
        pairs = [
            (base.with_f(_perturbed_data(base, rng)), base.with_f(_perturbed_data(base, rng)))
            for _ in range(run.pairs)
        ]
        options = self.solve_options()

        def check(pair: Tuple[ObstacleProblem, ObstacleProblem]) -> StabilityReport:
            return contraction_check(pair[0], pair[1], tol=CONTRACTION_SLACK, **options)

        if run.workers > 1:
            with ThreadPoolExecutor(max_workers=run.workers) as executor:
                reports = list(executor.map(check, pairs))
        else:
            reports = [check(pair) for pair in pairs]

        rows = []
        worst = -math.inf
        for index, report in enumerate(reports):
            for member, solve_report in enumerate(report.reports, start=1):
                self.note_convergence(solve_report, f"pair {index} member {member}")
            excess = report.l1_xi_distance - report.l1_data_distance
            worst = max(worst, excess)
            rows.append([index, report.l1_data_distance, report.l1_xi_distance, CONTRACTION_SLACK - excess, report.passed])

        self.write_table("contraction.csv", self.columns, rows)
        self.record_check("l1_contraction", worst, CONTRACTION_SLACK, all(report.passed for report in reports), pairs=len(reports))


class StabilityPipeline(Pipeline):
    """Coincidence-set stability for f and f + delta_f on D = the whole domain"""

    columns = [
        Column("l1_data_distance", "f length^N", "|f1 - f2|_1", "coincidence-set stability"),
        Column("lambda", "f", "non-degeneracy constant", "coincidence-set stability"),
        Column("bound", "length^N", "|f1 - f2|_1 / lambda", "coincidence-set stability"),
        Column("sym_diff_measure", "length^N", "meas(I1 xor I2)", "coincidence-set stability"),
        Column("l1_xi_distance", "f length^N", "|xi1 - xi2|_1", "L1 contraction"),
        Column("passed", "bool", "sym_diff_measure <= bound", "coincidence-set stability"),
    ]

    def _largest_lambda(self, problems: List[ObstacleProblem]) -> float:
        """Largest lambda with f - A psi <= -lambda at every interior node of every problem"""
        largest = math.inf
        for problem in problems:
            a_psi = apply_a(problem.spec, problem.psi).au.values
            gap = (problem.f.values - a_psi)[problem.grid.interior_mask]
            largest = min(largest, float(-np.max(gap)))
        return largest

    def run(self):
        run = self.config.run
        problem1 = build_problem(self.config)
        problem2 = problem1.with_f(problem1.f.with_values(problem1.f.values + run.delta_f))
        region = RegionMask.full(problem1.grid)

        lam: Optional[float] = run.lam
        if lam is None:
            lam = self._largest_lambda([problem1, problem2])
            if not lam > 0:
                raise ConfigError("run.lam", "no positive lambda satisfies f - A psi <= -lambda on the domain")
            self.logger.info(f"Using the largest admissible lambda = {lam:.6g}")

        report = stability_check(problem1, problem2, region, lam, eps=run.eps, **self.solve_options())
        for member, solve_report in enumerate(report.reports, start=1):
            self.note_convergence(solve_report, f"member {member}")

        self.write_table("stability.csv", self.columns, [[
            report.l1_data_distance, lam, report.bound, report.sym_diff_measure, report.l1_xi_distance, report.passed,
        ]])
        self.record_check("coincidence_stability", report.sym_diff_measure, report.bound, report.passed, lam=lam)
        contraction_ok = report.l1_xi_distance <= report.l1_data_distance + CONTRACTION_SLACK
        self.record_check("l1_contraction", report.l1_xi_distance - report.l1_data_distance, CONTRACTION_SLACK, contraction_ok)
        self.write_summary("stability_summary.txt", report.summary())


class ChiConvergencePipeline(Pipeline):
    """chi_{u_n = psi_n} against chi_{u = psi} for psi_n = psi + bump / n"""

    columns = [
        Column("level", "1", "n", "convergence of coincidence sets"),
        Column("distance", "length^(N/q)", "|chi_n - chi|_q", "convergence of coincidence sets"),
        Column("sym_diff_measure", "length^N", "meas(I_n xor I)", "convergence of coincidence sets"),
        Column("in_measure_to_limit", "length^N", "meas{|u_n - u| > s}", "convergence in measure"),
        Column("degenerate_nodes", "1", "nodes with |A psi - f| < eta", "convergence of coincidence sets"),
        Column("converged", "bool", "both solves converged", "convergence of coincidence sets"),
    ]

    def run(self):
        run = self.config.run
        problem = build_problem(self.config)
        grid = problem.grid
        bump = smooth_bump(grid, grid.center(), 0.2 * min(grid.extent), 0.1 * (1.0 + problem.psi.max_abs()))
        family = obstacle_family(problem.spec, problem.f, problem.psi, bump)

        levels = [int(round(level)) for level in run.chain_levels]
        rows = chi_convergence(family, levels, q=run.q, s=run.s, eps=run.eps, **self.solve_options())
        for row in rows:
            if not row.converged:
                self.mark_unconverged(f"chi level {row.level}")

        self.write_table("chi.csv", self.columns, [[
            row.level, row.distance, row.sym_diff_measure, row.in_measure_to_limit, row.degenerate_nodes, row.converged,
        ] for row in rows])
        first, last = rows[0].distance, rows[-1].distance
        self.record_check(
            "chi_convergence",
            last,
            first,
            last <= first,
            degenerate_nodes=rows[0].degenerate_nodes,
        )


class ExponentReportPipeline(Pipeline):
    """Exponent bounds, log-Hoelder constant, regime flags and derived exponents"""

    columns = [
        Column("N", "1", "dimension", "exponent hypotheses"),
        Column("p_min", "1", "inf p", "exponent hypotheses"),
        Column("p_max", "1", "sup p", "exponent hypotheses"),
        Column("log_holder_constant", "1", "sup |p(x) - p(y)| (-ln|x - y|)", "log-Hoelder continuity"),
        Column("bounds_ok", "bool", "1 < p_min and p_max < N", "exponent hypotheses"),
        Column("conjugate_condition_ok", "bool", "N p'/(N - p) > sup p'", "Sobolev conjugate condition"),
        Column("w11_regime", "bool", "p_min > 2 - 1/N", "exponent hypotheses"),
        Column("ls_regime", "bool", "p - 1 < q1", "exponent hypotheses"),
        Column("q0_min", "1", "N(p - 1)/(N - p)", "derived exponents"),
        Column("q0_max", "1", "N(p - 1)/(N - p)", "derived exponents"),
        Column("q1_min", "1", "N(p - 1)/(N - 1)", "derived exponents"),
        Column("q1_max", "1", "N(p - 1)/(N - 1)", "derived exponents"),
    ]

    def run(self):
        grid = build_grid(self.config.grid)
        p = build_exponent(self.config.exponent, grid)
        report = validate_exponent(p)
        q = [math.nan] * 4
        if p.p_max < p.N:
            derived = derived_exponents(p)
            q = [derived.q0.p_min, derived.q0.p_max, derived.q1.p_min, derived.q1.p_max]

        self.write_table("exponent.csv", self.columns, [[
            report.N, report.p_min, report.p_max, report.log_holder_constant, report.bounds_ok,
            report.conjugate_condition_ok, report.w11_regime, report.ls_regime, *q,
        ]])
        self.record_check("exponent_bounds", report.p_max, report.N, report.bounds_ok, p_min=report.p_min)
        self.record_check(
            "log_holder_finite",
            report.log_holder_constant,
            math.inf,
            math.isfinite(report.log_holder_constant),
        )


class StructureAuditPipeline(Pipeline):
    """Sampled coercivity, growth and monotonicity margins of the configured flux"""

    columns = [
        Column("sample_count", "1", "sampled triples", "structure conditions"),
        Column("seed", "1", "sampling seed", "structure conditions"),
        Column("alpha", "1", "coercivity constant", "structure conditions"),
        Column("gamma", "1", "growth constant", "structure conditions"),
        Column("coercivity_margin", "1", "relative, >= 0", "structure conditions"),
        Column("growth_margin", "1", "relative, >= 0", "structure conditions"),
        Column("monotonicity_margin", "1", "per |xi - xi'|^2, > 0", "structure conditions"),
        Column("axis_coercivity_margin", "1", "per-axis flux, relative, >= 0", "structure conditions"),
        Column("axis_growth_margin", "1", "per-axis flux, relative, >= 0", "structure conditions"),
        Column("axis_monotonicity_margin", "1", "per-axis flux, per |xi - xi'|^2, > 0", "structure conditions"),
        Column("excluded_pairs", "1", "xi = xi'", "structure conditions"),
        Column("passed", "bool", "all margins hold", "structure conditions"),
    ]

    def run(self):
        run = self.config.run
        grid = build_grid(self.config.grid)
        spec = build_flux(self.config.flux, build_exponent(self.config.exponent, grid))
        audit = audit_structure(spec, run.sample_count, run.seed)

        self.write_table("structure.csv", self.columns, [[
            audit.sample_count, audit.seed, audit.alpha, audit.gamma, audit.coercivity_margin,
            audit.growth_margin, audit.monotonicity_margin, audit.axis_coercivity_margin, audit.axis_growth_margin,
            audit.axis_monotonicity_margin, audit.excluded_pairs, audit.passed,
        ]])
        self.record_check("coercivity", audit.coercivity_margin, -1e-12, audit.coercivity_margin >= -1e-12)
        self.record_check("growth", audit.growth_margin, -1e-12, audit.growth_margin >= -1e-12)
        self.record_check("monotonicity", audit.monotonicity_margin, 0.0, audit.monotonicity_margin > 0.0)
        self.record_check("axis_coercivity", audit.axis_coercivity_margin, -1e-12, audit.axis_coercivity_margin >= -1e-12)
        self.record_check("axis_growth", audit.axis_growth_margin, -1e-12, audit.axis_growth_margin >= -1e-12)
        self.record_check("axis_monotonicity", audit.axis_monotonicity_margin, 0.0, audit.axis_monotonicity_margin > 0.0)


class ManufacturedPipeline(Pipeline):
    """Observed L-infinity order against u* = product of sines, data from a finer grid"""

    columns = [
        Column("n", "1", "nodes per axis", "discretization order"),
        Column("h", "length", "grid step", "discretization order"),
        Column("linf_error", "u", "max |u_h - u*|", "discretization order"),
        Column("order", "1", "log(e_prev / e) / log(h_prev / h)", "discretization order"),
        Column("iterations", "sweeps", "symmetric PGS sweeps", "discretization order"),
    ]

    def _manufactured_data(self, n: int) -> Tuple[FluxSpec, ScalarField, ScalarField]:
        grid_block = self.config.grid
        grid = build_grid(grid_block, [n] * grid_block.dim)
        spec = build_flux(self.config.flux, build_exponent(self.config.exponent, grid))

        fine = build_grid(grid_block, [MANUFACTURED_REFINEMENT * (n - 1) + 1] * grid_block.dim)
        fine_spec = build_flux(self.config.flux, build_exponent(self.config.exponent, fine))
        fine_au = apply_a(fine_spec, _sines(fine)).au.values
        sampled = fine_au[tuple(slice(None, None, MANUFACTURED_REFINEMENT) for _ in range(grid.dim))]
        sampled = np.where(grid.boundary_mask, 0.0, sampled)
        return spec, ScalarField(grid, sampled), _sines(grid)

    def run(self):
        if self.config.exponent.kind == ExponentKind.TABLE:
            raise ConfigError("exponent.kind", "manufactured runs need a constant or affine exponent")
        solver = self.config.solver
        rows = []
        previous = None
        orders = []
        for n in self.config.run.levels:
            spec, f, u_star = self._manufactured_data(n)
            report = solve_unconstrained(spec, f, solver.tol, solver.max_iter, solver.method)
            self.note_convergence(report, f"n={n}")
            error = float(np.max(np.abs(report.u.values - u_star.values)))
            h = f.grid.h_min
            order = None
            if previous is not None and error > 0:
                order = math.log(previous[1] / error) / math.log(previous[0] / h)
                orders.append(order)
            rows.append([n, h, error, order, report.iterations])
            previous = (h, error)

        self.write_table("order.csv", self.columns, rows)
        if orders:
            self.record_check("observed_order", min(orders), MIN_OBSERVED_ORDER, min(orders) >= MIN_OBSERVED_ORDER, orders=orders)


def _sines(grid) -> ScalarField:
    values = np.ones(grid.n)
    for axis, coordinate in enumerate(grid.coordinates):
        values = values * np.sin(np.pi * coordinate / grid.extent[axis])
    values = np.where(grid.boundary_mask, 0.0, values)
    return ScalarField(grid, values)


PRESET_CLASSES = {
    PresetName.SOLVE: SolvePipeline,
    PresetName.LS_AUDIT: LSAuditPipeline,
    PresetName.EQUATION_AUDIT: EquationAuditPipeline,
    PresetName.CHAIN: ChainPipeline,
    PresetName.CONTRACTION: ContractionPipeline,
    PresetName.STABILITY: StabilityPipeline,
    PresetName.CHI_CONVERGENCE: ChiConvergencePipeline,
    PresetName.EXPONENT_REPORT: ExponentReportPipeline,
    PresetName.STRUCTURE_AUDIT: StructureAuditPipeline,
    PresetName.MANUFACTURED: ManufacturedPipeline,
}
