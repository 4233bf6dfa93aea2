//! Python bindings: the double-rotor skew product, the two-particle section
//! map, gamma classification and the event-driven simulator.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rotor_annulus::circle::{base_step, classify_value, GammaKind};
use rotor_annulus::oracle::{
    conserved_drift, double_rotor_annulus, double_rotor_state, two_particle_annulus,
    two_particle_sections, two_particle_state, Simulator, Wall,
};
use rotor_annulus::rng::SampleRng;
use rotor_annulus::single::{fiber_rotation_angle, SingleRotorState};
use rotor_annulus::two::{construct_w, n_epsilon as core_n_epsilon, Branch};
use rotor_annulus::{BaseState, Integrals, PhysicalParams, Sheet, SkewState};

fn py_err(e: rotor_annulus::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn sheet_of(name: &str) -> PyResult<Sheet> {
    match name {
        "O" | "outer" => Ok(Sheet::Outer),
        "I" | "inner" => Ok(Sheet::Inner),
        _ => Err(PyValueError::new_err(format!(
            "sheet must be 'O' or 'I', got {name:?}"
        ))),
    }
}

fn sheet_name(s: Sheet) -> &'static str {
    match s {
        Sheet::Outer => "O",
        Sheet::Inner => "I",
    }
}

/// Particle in an annulus whose inner and outer walls both rotate.
#[pyclass(name = "DoubleRotor", frozen)]
struct PyDoubleRotor {
    inner: rotor_annulus::DoubleRotor,
}

#[pymethods]
impl PyDoubleRotor {
    #[new]
    #[pyo3(signature = (r, eta1, eta2, n, e, f))]
    fn new(r: f64, eta1: f64, eta2: f64, n: f64, e: f64, f: f64) -> PyResult<Self> {
        let inner = rotor_annulus::DoubleRotor::new(
            PhysicalParams::double(r, eta1, eta2),
            Integrals::double(n, e, f),
        )
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Rotation number of the base map, in turns.
    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    #[getter]
    fn is_alternating(&self) -> bool {
        self.inner.is_alternating()
    }

    /// Arcs `(start, end)` of the set where the particle misses the inner wall.
    #[getter]
    fn u_arcs(&self) -> Vec<(f64, f64)> {
        self.inner.u.arcs.iter().map(|a| (a.start, a.end)).collect()
    }

    #[getter]
    fn u_measure(&self) -> f64 {
        self.inner.u.measure()
    }

    fn alpha(&self, s: f64) -> PyResult<f64> {
        self.inner.alpha(s).map_err(py_err)
    }

    fn tau(&self, s: f64) -> PyResult<f64> {
        self.inner.tau(s).map_err(py_err)
    }

    /// One skew-product step on `(s, phi)`; returns the new pair.
    fn step(&self, s: f64, phi: f64) -> PyResult<(f64, f64)> {
        let st = self
            .inner
            .skew_step(&SkewState::new(s, phi))
            .map_err(py_err)?;
        Ok((st.s, st.phi))
    }

    /// Orbit as a list of `(s, phi_lift, time)`, starting point included.
    fn orbit(&self, s: f64, phi: f64, steps: usize) -> PyResult<Vec<(f64, f64, f64)>> {
        let orbit = self
            .inner
            .orbit(SkewState::new(s, phi), steps)
            .map_err(py_err)?;
        Ok(orbit.iter().map(|st| (st.s, st.lift(), st.clock)).collect())
    }

    /// One base-map step on `(s, sheet)` with sheet `'O'` or `'I'`.
    fn base_step(&self, s: f64, sheet: &str) -> PyResult<(f64, &'static str)> {
        let b = base_step(
            BaseState::new(s, sheet_of(sheet)?),
            &self.inner.circle,
            &self.inner.u,
        )
        .map_err(py_err)?;
        Ok((b.s, sheet_name(b.sheet)))
    }

    #[pyo3(signature = (s, sheet="O", max_steps=10_000))]
    fn detect_period(&self, s: f64, sheet: &str, max_steps: usize) -> PyResult<Option<usize>> {
        self.inner
            .detect_period(BaseState::new(s, sheet_of(sheet)?), max_steps)
            .map_err(py_err)
    }

    /// Mean fiber rotation by trapezoid quadrature on `nodes` points.
    #[pyo3(signature = (nodes=1 << 14))]
    fn mean_alpha(&self, nodes: usize) -> PyResult<f64> {
        Ok(self.inner.mean_alpha(nodes).map_err(py_err)?.value)
    }

    /// Run the Cartesian simulator from the outer-wall state `(s, phi)` and
    /// return the largest relative drift of the conserved quantities.
    fn simulate(&self, py: Python<'_>, s: f64, phi: f64, events: usize) -> PyResult<PyObject> {
        let mut sim = Simulator::new(
            double_rotor_annulus(&self.inner),
            &double_rotor_state(&self.inner, s, phi),
        )
        .map_err(py_err)?;
        let c0 = sim.conserved();
        let mut outer = 0usize;
        sim.run_with(events, |ev| outer += usize::from(ev.wall == Wall::Outer))
            .map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("events", events)?;
        d.set_item("outer_hits", outer)?;
        d.set_item("time", sim.clock)?;
        d.set_item("drift", conserved_drift(&c0, &sim.conserved()))?;
        Ok(d.into_any().unbind())
    }
}

/// Two particles sharing a rotating inner wall, observed on the section of
/// the first particle's inner collisions.
#[pyclass(name = "TwoParticleSystem", frozen)]
struct PyTwoParticleSystem {
    inner: rotor_annulus::TwoParticleSystem,
}

#[pymethods]
impl PyTwoParticleSystem {
    #[new]
    #[pyo3(signature = (r, eta, n, e, vn, un))]
    fn new(r: f64, eta: f64, n: f64, e: f64, vn: f64, un: f64) -> PyResult<Self> {
        let inner = rotor_annulus::TwoParticleSystem::new(
            PhysicalParams::two_particle(r, eta),
            Integrals::two_particle(n, e, vn, un),
        )
        .map_err(py_err)?;
        Ok(Self { inner })
    }

    /// Parameters inside the persistence window for `eps`, with the chosen
    /// integer ratio: returns `(system, k_prime)`.
    #[staticmethod]
    fn construct(r: f64, eta: f64, n: f64, e: f64, eps: f64) -> PyResult<(Self, f64)> {
        let w = construct_w(r, eta, n, e, eps).map_err(py_err)?;
        Ok((Self { inner: w.system }, w.k_prime))
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }

    #[getter]
    fn vn(&self) -> f64 {
        self.inner.vn()
    }

    #[getter]
    fn un(&self) -> f64 {
        self.inner.un()
    }

    /// One section step; returns `(s, t, branch)` with branch `'even'` or `'odd'`.
    fn step(&self, s: f64, t: f64) -> PyResult<(f64, f64, &'static str)> {
        let (st, b) = self
            .inner
            .two_step(&rotor_annulus::TwoParticleState::new(s, t))
            .map_err(py_err)?;
        Ok((st.s, st.t, if b == Branch::Odd { "odd" } else { "even" }))
    }

    /// Sample `samples` starts near `t = ½` and report how many kept the odd
    /// branch for every guaranteed step.
    #[pyo3(signature = (eps, samples=100, seed=0))]
    fn persistence(
        &self,
        py: Python<'_>,
        eps: f64,
        samples: usize,
        seed: u64,
    ) -> PyResult<PyObject> {
        let mut rng = SampleRng::new(seed);
        let rep = self
            .inner
            .persistence_experiment(eps, samples, &mut rng)
            .map_err(py_err)?;
        let survived = rep
            .samples
            .iter()
            .filter(|r| r.survived_steps == rep.n_epsilon && r.bounds_ok)
            .count();
        let d = PyDict::new(py);
        d.set_item("n_epsilon", rep.n_epsilon)?;
        d.set_item("samples", rep.samples.len())?;
        d.set_item("survived", survived)?;
        d.set_item("all_survived", rep.all_survived())?;
        Ok(d.into_any().unbind())
    }

    /// Section points `(s, t, hits)` recorded by the Cartesian simulator.
    #[pyo3(signature = (s, t, count, theta2=2.0, max_events=1_000_000))]
    fn simulate_sections(
        &self,
        s: f64,
        t: f64,
        count: usize,
        theta2: f64,
        max_events: usize,
    ) -> PyResult<Vec<(f64, f64, usize)>> {
        let pts =
            two_particle_sections(&self.inner, s, t, theta2, count, max_events).map_err(py_err)?;
        Ok(pts.iter().map(|p| (p.s, p.t, p.u_hits)).collect())
    }

    /// Relative drift of the conserved quantities over `events` collisions.
    #[pyo3(signature = (s, t, events, theta2=2.0))]
    fn simulate_drift(&self, s: f64, t: f64, events: usize, theta2: f64) -> PyResult<f64> {
        let start = two_particle_state(&self.inner, s, t, theta2).map_err(py_err)?;
        let mut sim = Simulator::new(two_particle_annulus(&self.inner), &start).map_err(py_err)?;
        let c0 = sim.conserved();
        sim.run_with(events, |_| {}).map_err(py_err)?;
        Ok(conserved_drift(&c0, &sim.conserved()))
    }
}

/// Continued-fraction classification of `value` in `[0, 1)`.
#[pyfunction]
#[pyo3(signature = (value, depth=40))]
fn classify(py: Python<'_>, value: f64, depth: usize) -> PyResult<PyObject> {
    let c = classify_value(value, depth).map_err(py_err)?;
    let d = PyDict::new(py);
    match c.kind {
        GammaKind::Rational { p, q } => {
            d.set_item("kind", "rational")?;
            d.set_item("p", p)?;
            d.set_item("q", q)?;
        }
        GammaKind::DiophantineLike => d.set_item("kind", "diophantine_like")?,
        GammaKind::LiouvilleLike => d.set_item("kind", "liouville_like")?,
    }
    d.set_item("partial_quotients", c.partial_quotients)?;
    d.set_item("max_partial_quotient", c.max_partial_quotient)?;
    Ok(d.into_any().unbind())
}

/// Guaranteed number of odd steps for phases within `eps` of one half.
#[pyfunction]
fn n_epsilon(eps: f64) -> PyResult<usize> {
    core_n_epsilon(eps).map_err(py_err)
}

/// Tangential exchange at a rotor: `(vt, r*omega, eta) -> (vt', r*omega')`.
#[pyfunction]
fn exchange(vt: f64, r_omega: f64, eta: f64) -> (f64, f64) {
    rotor_annulus::rotor::exchange(vt, r_omega, eta)
}

/// Fiber rotation per outer bounce of a single rotor, from the velocity
/// split just after an outer bounce.
#[pyfunction]
fn single_rotor_rotation(r: f64, eta: f64, vt: f64, vn: f64, omega: f64) -> PyResult<f64> {
    let p = PhysicalParams::single(r, eta);
    let st = SingleRotorState::from_outer(vt, vn, omega, 0.0, &p).map_err(py_err)?;
    fiber_rotation_angle(&st, &p).map_err(py_err)
}

#[pymodule]
fn rotor_annulus_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDoubleRotor>()?;
    m.add_class::<PyTwoParticleSystem>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add_function(wrap_pyfunction!(n_epsilon, m)?)?;
    m.add_function(wrap_pyfunction!(exchange, m)?)?;
    m.add_function(wrap_pyfunction!(single_rotor_rotation, m)?)?;
    Ok(())
}
