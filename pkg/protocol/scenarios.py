"""
Scenario runners: one figure-reproduction recipe per ExperimentConfig.

Each runner drives the computational modules, fits the results and returns
a ScenarioOutput whose tables follow the documented CSV schemas. Physics
warnings raised anywhere during the run are collected into the output.
"""

import logging
import math
import time
import warnings
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from analyzers.binning import bin_correlations
from analyzers.detection import detection_factor, invert_detection
from analyzers.friedel_fit import fit_friedel, friedel_fft, wavevector_slope
from analyzers.holes import hole_decay_length
from analyzers.lightcone_fit import fit_lightcone
from analyzers.luttinger_fit import LuttingerFitter, fit_power_law_tail
from exact.lanczos import lanczos_extremal
from exact.structure_factor import dsf_ridge_velocity, dynamical_structure_factor
from exact.susceptibility import susceptibility_and_velocity
from exact.thermal import thermal_observables, varmz_offset_correction
from freefermion.disorder import default_distances, disorder_ensemble
from hilbert.basis import enumerate_sector
from hilbert.observables import observable_cxx, observable_czz
from lattice.couplings import build_couplings
from models.lattice_models import ChainGeometry, CouplingModel, Sign
from models.protocol_models import FriedelMode, QuenchInitial, RampResult
from models.result_models import CorrelationProfile, FitResult, PlotSpec, ScenarioOutput, json_ready
from models.state_models import LanczosResult, Which
from protocol.angular import angular_scan
from protocol.friedel import run_friedel
from protocol.quench import run_quench
from protocol.ramp import back_and_forth_contrast, ramp_step_self_check, rate_equation_population, run_ramp
from protocol.snapshots import sample_snapshots
from utils.config import ExperimentConfig, Scenario
from utils.exceptions import FitError, PhysicsWarning

PROFILE_COLUMNS = ["r", "d", "mean", "stderr", "n_pairs"]


def profile_frame(profile: CorrelationProfile) -> pd.DataFrame:
    return pd.DataFrame({"r": profile.r, "d": profile.d, "mean": profile.mean,
                         "stderr": profile.stderr, "n_pairs": profile.n_pairs},
                        columns=PROFILE_COLUMNS)


def _profile_rows(profile: CorrelationProfile, **keys) -> List[dict]:
    return [{**keys, "r": r, "d": d, "mean": m, "stderr": e}
            for r, d, m, e in zip(profile.r, profile.d, profile.mean, profile.stderr)]


class ScenarioRunner:
    """Runs the scenario named in an ExperimentConfig"""

    def __init__(self, config: ExperimentConfig, seed: Optional[int] = None, workers: int = 1,
                 logger: Optional[logging.Logger] = None):
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.workers = max(1, int(workers))
        self.logger = logger or logging.getLogger(__name__)
        self.geometry = config.geometry.to_geometry()
        self.model = config.coupling.to_model()
        self._runners: Dict[Scenario, Callable[[ScenarioOutput], None]] = {
            Scenario.GROUND_STATE_CORRELATIONS: self._ground_state_correlations,
            Scenario.ADIABATIC_RAMP: self._adiabatic_ramp,
            Scenario.BACK_AND_FORTH_RAMP: self._back_and_forth_ramp,
            Scenario.FRIEDEL: self._friedel,
            Scenario.QUENCH: self._quench,
            Scenario.DSF: self._dsf,
            Scenario.DISORDERED_CHAIN: self._disordered_chain,
            Scenario.THERMAL_COMPARISON: self._thermal_comparison,
        }

    def run(self) -> ScenarioOutput:
        scenario = self.config.scenario
        output = ScenarioOutput(scenario=scenario.value)
        started = time.time()
        self.logger.info(f"[START] Scenario {scenario.value} (seed={self.seed}, workers={self.workers})")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", PhysicsWarning)
            self._runners[scenario](output)
        for w in caught:
            if issubclass(w.category, PhysicsWarning):
                message = str(w.message)
                if message not in output.warnings:
                    output.warnings.append(message)
        self.logger.info(f"[COMPLETE] Scenario {scenario.value} in {time.time() - started:.2f}s "
                         f"({len(output.warnings)} physics warnings)")
        return output

    # ------------------------------------------------------------ helpers

    @property
    def _afm(self) -> bool:
        return self.model.sign is Sign.AFM

    def _warn(self, message: str):
        self.logger.warning(f"[WARNING] {message}")
        warnings.warn(message, PhysicsWarning)

    def _fitter(self) -> LuttingerFitter:
        analysis = self.config.analysis
        return LuttingerFitter(envelope=analysis.envelope, k_guess=analysis.k_guess,
                               bootstrap=analysis.bootstrap, seed=self.seed,
                               workers=self.workers, logger=self.logger)

    def _ground_state(self, geom: ChainGeometry, model: CouplingModel,
                      magnetization: Optional[int] = None) -> LanczosResult:
        n_active = geom.n_active
        if magnetization is None:
            n_up = n_active // 2
        else:
            if (n_active + magnetization) % 2:
                raise ValueError(f"M_z={magnetization} has the wrong parity for {n_active} spins")
            n_up = (n_active + magnetization) // 2
        which = Which.LOWEST if model.sign is Sign.FM else Which.HIGHEST
        basis = enumerate_sector(geom.n_sites, n_up, geom.active_sites(), logger=self.logger)
        return lanczos_extremal(build_couplings(geom, model), basis, which=which, seed=self.seed,
                                logger=self.logger)

    def _fit_channels(self, output: ScenarioOutput, cx: CorrelationProfile,
                      cz: CorrelationProfile, rescale: float = 1.0) -> Dict[str, Optional[FitResult]]:
        """Cutoff scans for both channels; fit_cx.json / fit_cz.json / cutoff_scan.csv"""
        fitter = self._fitter()
        analysis = self.config.analysis
        n_sites = self.geometry.n_sites
        rows = []
        fits: Dict[str, Optional[FitResult]] = {}
        for channel, profile in (("cx", cx), ("cz", cz)):
            scan = fitter.cutoff_scan(profile, n_sites, channel, cutoffs=analysis.cutoffs,
                                      stagger=self._afm and channel == "cx", rescale=rescale,
                                      tolerance=analysis.tolerance)
            rows.extend({"channel": channel, "r_c": row.r_c, "K": row.K, "K_err": row.K_err}
                        for row in scan.rows)
            fit = scan.selected_fit
            if fit is None:
                self._warn(f"{channel}: no stable cutoff plateau, reporting r_c=0")
                try:
                    fit = (fitter.fit_cx(profile, n_sites, 0.0, self._afm) if channel == "cx"
                           else fitter.fit_cz(profile, n_sites, 0.0, rescale))
                except FitError as exc:
                    self._warn(str(exc))
            fits[channel] = fit
            if fit is not None:
                payload = fit.to_dict()
                payload["selected_rc"] = scan.selected_rc
                output.payloads[f"fit_{channel}.json"] = payload
        output.tables["cutoff_scan.csv"] = pd.DataFrame(rows, columns=["channel", "r_c", "K", "K_err"])
        return fits

    @staticmethod
    def _correlation_plot(name: str, profiles: Dict[str, CorrelationProfile], title: str) -> PlotSpec:
        first = next(iter(profiles.values()))
        return PlotSpec(name=name, kind="line", x=first.r,
                        series={label: np.abs(p.mean) for label, p in profiles.items()
                                if len(p) == len(first)},
                        xlabel="chord distance r", ylabel="|C(r)|", title=title, log_log=True)

    # ---------------------------------------------------------- scenarios

    def _ground_state_correlations(self, output: ScenarioOutput):
        geom = self.geometry
        result = self._ground_state(geom, self.model)
        cx = bin_correlations(observable_cxx(result.state), geom, basis="x", log=self.logger)
        cz = bin_correlations(observable_czz(result.state), geom, basis="z", log=self.logger)
        output.tables["gs_cx.csv"] = profile_frame(cx)
        output.tables["gs_cz.csv"] = profile_frame(cz)
        fits = self._fit_channels(output, cx, cz)

        eps_up, eps_dn = self.config.noise.to_noise().readout_errors
        output.payloads["gs_summary.json"] = json_ready({
            "energy": result.energy, "residual": result.residual, "degenerate": result.degenerate,
            "gap": result.gap, "sign": self.model.sign.value, "n_sites": geom.n_sites,
            "detection_factor": detection_factor(eps_up, eps_dn),
            "K_cx": fits["cx"]["K"] if fits["cx"] else None,
            "K_cz": fits["cz"]["K"] if fits["cz"] else None,
        })
        output.plots.append(self._correlation_plot("gs_correlations", {"C^x": cx, "C^z": cz},
                                                   f"Ground state ({self.model.sign.value})"))

    def _run_ramp(self, reverse: bool) -> RampResult:
        ramp_cfg = self.config.ramp
        schedule = ramp_cfg.to_schedule(self.geometry, self.model.sign, reverse=reverse)
        if ramp_cfg.step_self_check:
            ramp_step_self_check(self.geometry, self.model, schedule, logger=self.logger)
        return run_ramp(self.geometry, self.model, schedule, self.config.noise.to_noise(),
                        n_trajectories=ramp_cfg.n_trajectories, seed=self.seed,
                        workers=self.workers, logger=self.logger)

    @staticmethod
    def _observables_frame(result: RampResult) -> pd.DataFrame:
        return pd.DataFrame([{
            "t_us": c.t_us, "sublattice_a": c.sublattice_a, "sublattice_a_err": c.sublattice_a_err,
            "sublattice_b": c.sublattice_b, "sublattice_b_err": c.sublattice_b_err,
            "active_fraction": c.active_fraction, "energy": c.energy, "energy_err": c.energy_err,
        } for c in result.checkpoints])

    def _adiabatic_ramp(self, output: ScenarioOutput):
        geom = self.geometry
        ramp_cfg = self.config.ramp
        noise = self.config.noise.to_noise()
        result = self._run_ramp(reverse=False)
        output.tables["ramp_observables.csv"] = self._observables_frame(result)

        rows = []
        for c in result.checkpoints:
            rows += _profile_rows(c.cx, t_us=c.t_us, basis="x")
            rows += _profile_rows(c.cz, t_us=c.t_us, basis="z")
        final = result.final()

        if ramp_cfg.n_shots > 0:
            eps_up, eps_dn = noise.readout_errors
            for label in ("z", "x"):
                shots = sample_snapshots(result.trajectories, basis_label=label,
                                         n_shots=ramp_cfg.n_shots, noise=noise, seed=self.seed,
                                         logger=self.logger)
                measured = bin_correlations(shots, geom, log=self.logger)
                corrected = invert_detection(measured, eps_up, eps_dn)
                rows += _profile_rows(corrected, t_us=final.t_us, basis=f"snapshot_{label}")

        if ramp_cfg.angles_rad:
            addressed = result.schedule.addressed_sites or None
            scan = angular_scan(result.trajectories, ramp_cfg.angles_rad, geom, addressed,
                                logger=self.logger)
            output.tables["angular_scan.csv"] = pd.DataFrame({
                "theta": scan.thetas, "sublattice_a": scan.sublattice_a,
                "sublattice_b": scan.sublattice_b,
            })
            for theta, profile in zip(scan.thetas, scan.profiles):
                rows += _profile_rows(profile, t_us=final.t_us, basis=f"theta={theta:.6g}")

        output.tables["ramp_profiles.csv"] = pd.DataFrame(
            rows, columns=["t_us", "basis", "r", "d", "mean", "stderr"])
        self._fit_channels(output, final.cx, final.cz)

        gamma = self.config.noise.gamma_per_us if noise.site_decay_rate > 0 else 0.0
        lost = 1.0 - final.active_fraction
        xi, chord = (math.inf, None)
        if 0.0 < lost < 0.5:
            xi, chord = hole_decay_length(lost, geom.n_sites)
        output.payloads["ramp_summary.json"] = json_ready({
            "n_trajectories": result.n_trajectories, "n_jumps": len(result.jumps),
            "final_active_fraction": final.active_fraction,
            "rate_equation_population": rate_equation_population(gamma, final.t_us),
            "hole_fraction": lost, "hole_decay_length": xi, "hole_decay_chord": chord,
            "final_energy": final.energy, "final_energy_err": final.energy_err,
            "addressed_sites": list(result.schedule.addressed_sites),
        })
        times = np.array([c.t_us for c in result.checkpoints])
        output.plots.append(PlotSpec(
            name="ramp_observables", kind="line", x=times,
            series={"sublattice A": np.array([c.sublattice_a for c in result.checkpoints]),
                    "sublattice B": np.array([c.sublattice_b for c in result.checkpoints])},
            xlabel="t (us)", ylabel="<sz>", title="Sublattice magnetization during the ramp"))
        output.plots.append(self._correlation_plot("ramp_final_correlations",
                                                   {"C^x": final.cx, "C^z": final.cz},
                                                   "Correlations after the ramp"))

    def _back_and_forth_ramp(self, output: ScenarioOutput):
        result = self._run_ramp(reverse=True)
        output.tables["ramp_observables.csv"] = self._observables_frame(result)
        initial, final = back_and_forth_contrast(result)
        output.payloads["back_and_forth.json"] = json_ready({
            "initial_contrast": initial, "final_contrast": final,
            "return_fidelity": final / initial if initial else math.nan,
            "end_time_us": result.schedule.end_time,
        })
        times = np.array([c.t_us for c in result.checkpoints])
        output.plots.append(PlotSpec(
            name="back_and_forth", kind="line", x=times,
            series={"sublattice A": np.array([c.sublattice_a for c in result.checkpoints]),
                    "sublattice B": np.array([c.sublattice_b for c in result.checkpoints])},
            xlabel="t (us)", ylabel="<sz>", title="Back-and-forth ramp"))

    def _friedel(self, output: ScenarioOutput):
        cfg = self.config.friedel
        n_spins = self.geometry.n_sites
        mode = FriedelMode(cfg.mode)
        schedule = None
        if mode is FriedelMode.ADIABATIC_RAMP:
            schedule = self.config.ramp.to_schedule(self.geometry, self.model.sign)

        profile_rows, fft_rows, fits = [], [], {}
        peaks: Dict[int, float] = {}
        series = {}
        for mz in cfg.Mz:
            result = run_friedel(n_spins, self.model, mz, mode, schedule,
                                 self.config.noise.to_noise(), self.config.ramp.n_trajectories,
                                 self.seed, self.workers, logger=self.logger)
            if result.degenerate:
                self._warn(f"Friedel M_z={mz}: degenerate ground state")
            profile_rows += [{"Mz": mz, "site": k, "j": result.j[k], "obc": result.obc[k],
                              "pbc": result.pbc[k], "signal": result.signal[k]}
                             for k in range(n_spins)]
            fft = friedel_fft(result.signal, log=self.logger)
            fft_rows += [{"Mz": mz, "n": n, "q": q, "amplitude": a}
                         for n, q, a in zip(fft.n, fft.q, fft.amplitude)]
            expected_n = (n_spins - mz) // 2
            entry = {"fft_peak_n": fft.peak_n, "fft_peak_q": fft.peak_q, "flat": fft.flat,
                     "expected_n": expected_n, "within_one_bin": abs(fft.peak_n - expected_n) <= 1,
                     "addressed": list(result.addressed), "degenerate": result.degenerate}
            try:
                fit = fit_friedel(result.signal, n_spins, mz, pin_wavevector=cfg.pin_wavevector,
                                  background=0.0, log=self.logger)
                entry["fit"] = fit.to_dict()
            except FitError as exc:
                self._warn(str(exc))
            if not fft.flat:
                peaks[mz] = fft.peak_q
            fits[str(mz)] = entry
            series[f"M_z={mz}"] = result.signal

        payload = {"n_spins": n_spins, "mode": mode.value, "sectors": fits}
        if len(peaks) >= 2:
            payload["wavevector_slope"] = wavevector_slope(peaks, n_spins).to_dict()
        output.payloads["friedel_fits.json"] = json_ready(payload)
        output.tables["friedel_profile.csv"] = pd.DataFrame(
            profile_rows, columns=["Mz", "site", "j", "obc", "pbc", "signal"])
        output.tables["friedel_fft.csv"] = pd.DataFrame(fft_rows, columns=["Mz", "n", "q", "amplitude"])
        output.plots.append(PlotSpec(name="friedel_signal", kind="line", x=np.arange(n_spins),
                                     series=series, xlabel="site", ylabel="<sz>_OBC - <sz>_PBC",
                                     title="Friedel oscillations"))

    def _quench(self, output: ScenarioOutput):
        cfg = self.config.quench
        grid = run_quench(self.geometry, self.model, QuenchInitial(cfg.initial), cfg.times(),
                          dt=cfg.dt_us, include_vdw=cfg.include_vdw, workers=self.workers,
                          logger=self.logger)
        rows = [{"t_us": t, "d_sites": d, "czz": grid.values[it, k], "stderr": grid.stderr[it, k]}
                for it, t in enumerate(grid.times) for k, d in enumerate(grid.d)]
        output.tables["quench_grid.csv"] = pd.DataFrame(rows, columns=["t_us", "d_sites", "czz", "stderr"])
        spread = float(np.ptp(grid.variance_mz)) if len(grid.variance_mz) else 0.0
        if spread > 1e-8 * max(1.0, float(np.max(np.abs(grid.variance_mz)))):
            self._warn(f"Var(M_z) drifted by {spread:.2e} during the quench")
        try:
            fit = fit_lightcone(grid, d_min=cfg.d_min, d_max=cfg.d_max, j_xy=self.model.j_xy,
                                n_sigma=cfg.n_sigma, relative_threshold=cfg.relative_threshold,
                                front_fraction=cfg.front_fraction, logger=self.logger)
            payload = fit.to_dict()
            payload["variance_mz_spread"] = spread
            output.payloads["fit_vg.json"] = json_ready(payload)
        except FitError as exc:
            self._warn(str(exc))
        output.plots.append(PlotSpec(name="quench_grid", kind="heatmap", x=grid.d, y=grid.times,
                                     z=grid.values, xlabel="d (sites)", ylabel="t (us)",
                                     title=f"C^z(d, t) after a {cfg.initial} quench"))

    def _dsf(self, output: ScenarioOutput):
        cfg = self.config.dsf
        geom = self.geometry
        matrices = build_couplings(geom, self.model)
        ground = self._ground_state(geom, self.model, cfg.Mz)
        grid = dynamical_structure_factor(matrices, geom, ground, eta=cfg.eta_rad_per_us,
                                          n_omega=cfg.n_omega, omega_max=cfg.omega_max_rad_per_us,
                                          lanczos_steps=cfg.lanczos_steps, logger=self.logger)
        rows = [{"q": q, "omega": w, "S": grid.intensity[iq, iw]}
                for iq, q in enumerate(grid.q) for iw, w in enumerate(grid.omega)]
        output.tables["dsf.csv"] = pd.DataFrame(rows, columns=["q", "omega", "S"])

        luttinger_k = cfg.luttinger_k
        k_source = "config"
        if luttinger_k is None:
            # AFM chains take K from C^z, FM chains from C^x
            try:
                if self._afm:
                    k_source = "fit_cz"
                    cz = bin_correlations(observable_czz(ground.state), geom, basis="z", log=self.logger)
                    luttinger_k = self._fitter().fit_cz(cz, geom.n_sites, 0.0)["K"]
                else:
                    k_source = "fit_cx"
                    cx = bin_correlations(observable_cxx(ground.state), geom, basis="x", log=self.logger)
                    luttinger_k = self._fitter().fit_cx(cx, geom.n_sites, 0.0, False)["K"]
            except FitError as exc:
                self._warn(str(exc))
                k_source = "default"
                luttinger_k = 1.0
        chi = susceptibility_and_velocity(matrices, geom, self.model, luttinger_k,
                                          magnetization=cfg.Mz, seed=self.seed, logger=self.logger)
        output.payloads["susceptibility.json"] = json_ready({
            "kappa": chi.kappa, "kappa_err": chi.kappa_err, "u": chi.u,
            "u_over_2ja": chi.u_over_2ja, "luttinger_k": chi.luttinger_k,
            "luttinger_k_source": k_source,
            "energies": chi.energies, "degenerate": chi.degenerate, "convention": chi.convention,
        })
        ridge = dsf_ridge_velocity(grid)
        output.payloads["dsf_summary.json"] = json_ready({
            "method": grid.method, "eta": grid.eta, "norm_factor": grid.norm_factor,
            "static_structure_factor": grid.static, "peak_omega": grid.peak_omega,
            "ridge_velocity": ridge, "u_from_susceptibility": chi.u,
            "relative_deviation": abs(ridge - chi.u) / abs(chi.u) if chi.u else math.nan,
        })
        output.plots.append(PlotSpec(name="dsf", kind="heatmap", x=grid.q, y=grid.omega,
                                     z=grid.intensity.T, xlabel="q", ylabel="omega (rad/us)",
                                     title="Dynamical structure factor"))

    def _disordered_chain(self, output: ScenarioOutput):
        cfg = self.config.disorder
        n_sites = self.geometry.n_sites
        distances = default_distances(n_sites, cfg.n_distances)
        disordered = disorder_ensemble(n_sites, cfg.p, weak_scale=cfg.weak_scale,
                                       n_realizations=cfg.n_realizations, seed=self.seed,
                                       j_xy=self.model.j_xy, distances=distances,
                                       n_offsets=cfg.n_offsets, workers=self.workers,
                                       logger=self.logger)
        clean = disorder_ensemble(n_sites, 0.0, weak_scale=cfg.weak_scale, n_realizations=1,
                                  seed=self.seed, j_xy=self.model.j_xy, distances=distances,
                                  n_offsets=cfg.n_offsets, logger=self.logger)
        output.tables["disorder_cx.csv"] = pd.DataFrame({
            "r": disordered.r, "mean_cx": disordered.mean, "stderr": disordered.stderr,
            "n_realizations": disordered.n_realizations,
        }, columns=["r", "mean_cx", "stderr", "n_realizations"])

        payload = {"p": cfg.p, "weak_scale": cfg.weak_scale, "n_sites": n_sites}
        try:
            tail = fit_power_law_tail(disordered.r, disordered.mean, disordered.stderr,
                                      significance=cfg.significance, logger=self.logger)
            payload["disordered"] = tail.to_dict()
        except FitError as exc:
            self._warn(str(exc))
        try:
            clean_tail = fit_power_law_tail(clean.r, clean.mean, significance=cfg.significance,
                                            logger=self.logger)
            payload["clean"] = clean_tail.to_dict()
            payload["clean_K"] = -1.0 / (2.0 * clean_tail["global_slope"])
        except FitError as exc:
            self._warn(str(exc))
        if 0.0 < cfg.p < 0.5:
            xi, chord = hole_decay_length(cfg.p, n_sites)
            payload["hole_decay_length"] = xi
            payload["hole_decay_chord"] = chord
        output.payloads["fit_tail.json"] = json_ready(payload)
        output.plots.append(PlotSpec(name="disorder_cx", kind="line", x=disordered.r,
                                     series={f"p={cfg.p}": np.abs(disordered.mean),
                                             "clean": np.abs(clean.mean)},
                                     xlabel="r (sites)", ylabel="|C^x(r)|",
                                     title="Bond-disordered chain", log_log=True))

    def _thermal_comparison(self, output: ScenarioOutput):
        cfg = self.config.thermal
        geom = self.geometry
        ground = self._ground_state(geom, self.model)
        gs_cx = bin_correlations(observable_cxx(ground.state), geom, basis="x", log=self.logger)
        gs_cz = bin_correlations(observable_czz(ground.state), geom, basis="z", log=self.logger)
        rows = _profile_rows(gs_cx, T_over_J=0.0, basis="x") + _profile_rows(gs_cz, T_over_J=0.0, basis="z")
        summary = {"ground_energy": ground.energy, "target_variance_mz": cfg.target_variance_mz,
                   "temperatures": {}}
        curves = {"T=0": gs_cx}

        for t_over_j in cfg.temperatures_over_j:
            obs = thermal_observables(geom, self.model, t_over_j * self.model.j_xy,
                                      transverse_field=cfg.transverse_field_rad_per_us,
                                      hole_density=cfg.hole_density,
                                      n_realizations=cfg.n_realizations, seed=self.seed,
                                      workers=self.workers, logger=self.logger)
            cx = bin_correlations(obs.cx, geom, basis="x", errors=obs.cx_err,
                                  n_samples=obs.n_realizations, log=self.logger)
            entry = {"variance_mz": obs.variance_mz, "n_realizations": obs.n_realizations}
            czz = obs.cz
            if cfg.target_variance_mz is not None:
                czz = varmz_offset_correction(obs.cz, cfg.target_variance_mz)
                entry["czz_offset"] = float(np.nanmean(czz - obs.cz))
                entry["variance_mz_corrected"] = float(np.nansum(czz))
            cz = bin_correlations(czz, geom, basis="z", errors=obs.cz_err,
                                  n_samples=obs.n_realizations, log=self.logger)
            rows += _profile_rows(cx, T_over_J=t_over_j, basis="x")
            rows += _profile_rows(cz, T_over_J=t_over_j, basis="z")
            summary["temperatures"][f"{t_over_j:g}"] = entry
            curves[f"T={t_over_j:g}J"] = cx

        output.tables["thermal_profiles.csv"] = pd.DataFrame(
            rows, columns=["T_over_J", "basis", "r", "d", "mean", "stderr"])
        output.payloads["thermal_summary.json"] = json_ready(summary)
        output.plots.append(self._correlation_plot("thermal_cx", curves, "C^x at finite temperature"))
