//! Python bindings. Rational coefficients come back as `fractions.Fraction`,
//! coefficients mod p as `int`.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use paramodular::borcherds::{borcherds_expand, BorcherdsExpansion};
use paramodular::field::{Field, FieldTag, PrimeField, Rat, Rationals};
use paramodular::jacobi::{gritsenko_lift, space_basis, v2, BasisOptions, BasisSource, DimensionTable, JacobiFormFragment, Strategy};
use paramodular::paramodular::{
    certify_nonlift, infill, parse_eigen, polarize, FourierIndex, IndexWindow, ParamodularFragment,
};
use paramodular::restriction::{jrmj_basis, RestrictionProblem};
use paramodular::store::{CoeffDB, JacobiDB};
use paramodular::theta::{search, ThetaBlock};
use paramodular::weak::{inflate, inflate_case3, validate_weight0, InflationSpec, WeakJacobiFragment};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &Rat) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((r.to_string(),))
}

fn rat_arg(v: &Bound<'_, PyAny>) -> PyResult<Rat> {
    v.str()?.to_cow()?.parse().map_err(err)
}

#[pyclass(name = "ThetaBlock", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyThetaBlock(ThetaBlock);

#[pymethods]
impl PyThetaBlock {
    #[new]
    fn new(eta_power: i64, thetas: Vec<u32>) -> PyResult<Self> {
        ThetaBlock::new(eta_power, thetas).map(Self).map_err(err)
    }

    /// Parses `"eta^-6 th1 th1 th2 ..."`.
    #[staticmethod]
    fn parse(s: &str) -> PyResult<Self> {
        s.parse().map(Self).map_err(err)
    }

    #[getter]
    fn eta_power(&self) -> i64 {
        self.0.eta_power()
    }

    #[getter]
    fn thetas(&self) -> Vec<u32> {
        self.0.thetas().to_vec()
    }

    #[getter]
    fn weight(&self) -> i64 {
        self.0.weight()
    }

    #[getter]
    fn index(&self) -> i64 {
        self.0.index()
    }

    #[getter]
    fn q_order(&self) -> i64 {
        self.0.q_order()
    }

    fn is_cusp(&self) -> bool {
        self.0.min_order() > Rat::zero()
    }

    /// Jacobi form expansion known for `n <= n_max`.
    fn jacobi_form(&self, n_max: i64) -> PyResult<PyJacobiForm> {
        BasisSource::Block(self.0.to_quotient())
            .expand(Rationals, self.0.weight(), self.0.index(), n_max)
            .map(PyJacobiForm)
            .map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("ThetaBlock('{}')", self.0)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

#[pyfunction]
#[pyo3(signature = (weight, index, length=None, cusp=false))]
fn theta_search(weight: i64, index: i64, length: Option<usize>, cusp: bool) -> PyResult<Vec<PyThetaBlock>> {
    let len = length.unwrap_or((12 - weight).max(0) as usize);
    Ok(search(weight, index, len)
        .map_err(err)?
        .into_iter()
        .filter(|b| !cusp || b.min_order() > Rat::zero())
        .map(PyThetaBlock)
        .collect())
}

/// Rational Jacobi form fragment `sum c(n, r) q^n zeta^r`.
#[pyclass(name = "JacobiForm", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyJacobiForm(JacobiFormFragment<Rationals>);

#[pymethods]
impl PyJacobiForm {
    #[getter]
    fn weight(&self) -> i64 {
        self.0.weight()
    }

    #[getter]
    fn index(&self) -> i64 {
        self.0.index()
    }

    #[getter]
    fn n_max(&self) -> i64 {
        self.0.n_max()
    }

    fn coeff<'py>(&self, py: Python<'py>, n: i64, r: i64) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.coeff(n, r).map_err(err)?)
    }

    fn is_cusp(&self) -> bool {
        self.0.is_cusp()
    }

    fn v2(&self, n_max: i64) -> PyResult<Self> {
        v2(&self.0, n_max).map(Self).map_err(err)
    }

    /// Gritsenko lift on `m <= depth`, `n <= n_max`.
    #[pyo3(signature = (depth=2, n_max=4))]
    fn lift(&self, depth: i64, n_max: i64) -> PyResult<PyParamodularForm> {
        let cover = IndexWindow { n_max, m_max: depth }.indices(self.0.index());
        let sign = if self.0.weight() % 2 == 0 { 1 } else { -1 };
        let f = gritsenko_lift(&self.0, &cover).map_err(err)?;
        let f = f.with_eigen(BTreeMap::from([(self.0.index(), sign)])).map_err(err)?;
        Ok(PyParamodularForm(Frag::Q(f)))
    }

    fn dumps(&self) -> String {
        JacobiDB::from_form(&self.0).serialize()
    }

    #[staticmethod]
    fn loads(text: &str) -> PyResult<Self> {
        JacobiDB::parse(text).and_then(|d| d.to_form(Rationals)).map(Self).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("JacobiForm(weight={}, index={}, n_max={})", self.0.weight(), self.0.index(), self.0.n_max())
    }
}

#[pyfunction]
#[pyo3(signature = (weight, index, n_max=None))]
fn jacobi_basis(weight: i64, index: i64, n_max: Option<i64>) -> PyResult<Vec<PyJacobiForm>> {
    let mut opts = BasisOptions::for_index(index);
    if let Some(n) = n_max {
        opts.n_max = n;
    }
    let strategies = [Strategy::ThetaBlocks, Strategy::ThetaBlockProducts, Strategy::V2Images, Strategy::ExactQuotients];
    let res = space_basis(weight, index, &strategies, &DimensionTable::established(), &opts).map_err(err)?;
    Ok(res.forms.into_iter().map(PyJacobiForm).collect())
}

/// Weight-0 weakly holomorphic Jacobi form, the input of a Borcherds product.
#[pyclass(name = "WeakJacobiForm", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyWeakJacobiForm(WeakJacobiFragment);

#[pymethods]
impl PyWeakJacobiForm {
    #[getter]
    fn index(&self) -> i64 {
        self.0.index()
    }

    #[getter]
    fn n_max(&self) -> i64 {
        self.0.n_max()
    }

    fn coeff<'py>(&self, py: Python<'py>, n: i64, r: i64) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &self.0.coeff(n, r).map_err(err)?)
    }

    /// Integrality, weight and singular-part checks.
    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = validate_weight0(&self.0);
        let d = PyDict::new(py);
        d.set_item("passes", rep.passes())?;
        d.set_item("c00", fraction(py, &rep.c00)?)?;
        d.set_item("weight", fraction(py, &rep.weight)?)?;
        d.set_item("degenerate", rep.degenerate)?;
        d.set_item("violations", rep.violations)?;
        Ok(d)
    }

    /// Divisor multiplicities keyed by `(D, r)`.
    fn humbert_multiplicities<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (k, v) in self.0.humbert_multiplicities().map_err(err)? {
            d.set_item(k, fraction(py, &v)?)?;
        }
        Ok(d)
    }

    fn borcherds(&self, depth: usize, n_max: i64) -> PyResult<PyBorcherdsProduct> {
        borcherds_expand(&self.0, depth, n_max).map(PyBorcherdsProduct).map_err(err)
    }

    fn dumps(&self) -> String {
        JacobiDB::from_form(self.0.form()).serialize()
    }

    #[staticmethod]
    fn loads(text: &str) -> PyResult<Self> {
        let f = JacobiDB::parse(text).and_then(|d| d.to_form(Rationals)).map_err(err)?;
        WeakJacobiFragment::new(f).map(Self).map_err(err)
    }
}

/// `(-1)^nu (phi|V2)/phi + beta Theta/phi` (case 2) or `Theta/phi` (case 3).
#[pyfunction]
#[pyo3(signature = (phi, theta, n_max, beta=None, case=2))]
fn inflate_psi(
    phi: &PyThetaBlock,
    theta: &PyThetaBlock,
    n_max: i64,
    beta: Option<&Bound<'_, PyAny>>,
    case: u8,
) -> PyResult<PyWeakJacobiForm> {
    let psi = match case {
        2 => {
            let beta = match beta {
                Some(b) => rat_arg(b)?,
                None => Rat::from_int(-1),
            };
            inflate(&InflationSpec::case2(phi.0.clone(), theta.0.clone(), beta), n_max)
        }
        3 => inflate_case3(&phi.0, &theta.0, n_max),
        _ => return Err(PyValueError::new_err("case must be 2 or 3")),
    };
    psi.map(PyWeakJacobiForm).map_err(err)
}

#[pyclass(name = "BorcherdsProduct", frozen)]
struct PyBorcherdsProduct(BorcherdsExpansion);

#[pymethods]
impl PyBorcherdsProduct {
    #[getter]
    fn weight(&self) -> i64 {
        self.0.exponents.weight
    }

    #[getter]
    fn leading_slice(&self) -> i64 {
        self.0.exponents.leading_slice()
    }

    #[getter]
    fn fricke_sign(&self) -> Option<i8> {
        self.0.fricke_sign
    }

    #[getter]
    fn slices(&self) -> Vec<PyJacobiForm> {
        self.0.slices.iter().cloned().map(PyJacobiForm).collect()
    }

    fn fragment(&self) -> PyParamodularForm {
        PyParamodularForm(Frag::Q(self.0.fragment.clone()))
    }
}

#[derive(Clone)]
enum Frag {
    Q(ParamodularFragment<Rationals>),
    P(ParamodularFragment<PrimeField>),
}

/// Truncated Fourier expansion `sum a(n, r, m) q^n zeta^r xi^(m N)`.
#[pyclass(name = "ParamodularForm", frozen, from_py_object)]
#[derive(Clone)]
struct PyParamodularForm(Frag);

impl PyParamodularForm {
    fn q(&self) -> PyResult<&ParamodularFragment<Rationals>> {
        match &self.0 {
            Frag::Q(f) => Ok(f),
            Frag::P(_) => Err(PyValueError::new_err("expected rational coefficients")),
        }
    }

    fn in_field(&self, p: Option<u64>) -> PyResult<Frag> {
        match (p, &self.0) {
            (None, f) => Ok(f.clone()),
            (Some(p), Frag::Q(f)) => {
                let fp = PrimeField::new(p).map_err(err)?;
                Ok(Frag::P(f.map_field(fp.clone(), |x| fp.from_rat(x)).map_err(err)?))
            }
            (Some(p), Frag::P(f)) if f.field().modulus() == p => Ok(self.0.clone()),
            _ => Err(PyValueError::new_err("field mismatch")),
        }
    }
}

#[pymethods]
impl PyParamodularForm {
    #[getter]
    fn level(&self) -> i64 {
        match &self.0 {
            Frag::Q(f) => f.level(),
            Frag::P(f) => f.level(),
        }
    }

    #[getter]
    fn weight(&self) -> i64 {
        match &self.0 {
            Frag::Q(f) => f.weight(),
            Frag::P(f) => f.weight(),
        }
    }

    /// `None` for rationals, otherwise the prime.
    #[getter]
    fn prime(&self) -> Option<u64> {
        match &self.0 {
            Frag::Q(_) => None,
            Frag::P(f) => Some(f.field().modulus()),
        }
    }

    fn __len__(&self) -> usize {
        match &self.0 {
            Frag::Q(f) => f.len(),
            Frag::P(f) => f.len(),
        }
    }

    /// Coefficient at `(n, r, m)`, or `None` outside the known window.
    fn coeff<'py>(&self, py: Python<'py>, n: i64, r: i64, m: i64) -> PyResult<Option<Bound<'py, PyAny>>> {
        let t = FourierIndex::new(self.level(), n, r, m).map_err(err)?;
        match &self.0 {
            Frag::Q(f) => f.get(&t).map(|v| fraction(py, v)).transpose(),
            Frag::P(f) => f.get(&t).map(|v| Ok(v.into_pyobject(py)?.into_any())).transpose(),
        }
    }

    fn indices(&self) -> Vec<(i64, i64, i64)> {
        match &self.0 {
            Frag::Q(f) => f.coverage().map(|t| t.as_tuple()).collect(),
            Frag::P(f) => f.coverage().map(|t| t.as_tuple()).collect(),
        }
    }

    fn fricke_sign(&self) -> PyResult<Option<i8>> {
        match &self.0 {
            Frag::Q(f) => f.fricke_sign(),
            Frag::P(f) => f.fricke_sign(),
        }
        .map_err(err)
    }

    fn reduce(&self, p: u64) -> PyResult<Self> {
        self.in_field(Some(p)).map(Self)
    }

    fn polarize(&self, eps2: i8, eps_n: i8) -> PyResult<Self> {
        Ok(Self(match &self.0 {
            Frag::Q(f) => Frag::Q(polarize(f, eps2, eps_n).map_err(err)?),
            Frag::P(f) => Frag::P(polarize(f, eps2, eps_n).map_err(err)?),
        }))
    }

    fn infill(&self) -> PyResult<Self> {
        Ok(Self(match &self.0 {
            Frag::Q(f) => Frag::Q(infill(f).map_err(err)?),
            Frag::P(f) => Frag::P(infill(f).map_err(err)?),
        }))
    }

    fn dumps(&self, coverage: &str) -> String {
        match &self.0 {
            Frag::Q(f) => CoeffDB::from_fragment(f, coverage).serialize(),
            Frag::P(f) => CoeffDB::from_fragment(f, coverage).serialize(),
        }
    }

    #[staticmethod]
    fn loads(text: &str) -> PyResult<Self> {
        let db = CoeffDB::parse(text).map_err(err)?;
        let f = match db.header.field {
            FieldTag::Rationals => Frag::Q(db.to_fragment(Rationals).map_err(err)?),
            FieldTag::Prime(p) => Frag::P(db.to_fragment(PrimeField::new(p).map_err(err)?).map_err(err)?),
        };
        Ok(Self(f))
    }

    fn __repr__(&self) -> String {
        format!("ParamodularForm(level={}, weight={}, terms={})", self.level(), self.weight(), self.__len__())
    }
}

/// True when `f` is independent of `lifts` on the shared indices.
#[pyfunction]
#[pyo3(signature = (f, lifts, prime=None))]
fn is_nonlift(f: &PyParamodularForm, lifts: Vec<PyParamodularForm>, prime: Option<u64>) -> PyResult<bool> {
    match f.in_field(prime)? {
        Frag::Q(g) => {
            let ls = lifts.iter().map(|l| l.q().cloned()).collect::<PyResult<Vec<_>>>()?;
            certify_nonlift(&g, &ls).map_err(err)
        }
        Frag::P(g) => {
            let p = g.field().modulus();
            let mut ls = Vec::new();
            for l in &lifts {
                match l.in_field(Some(p))? {
                    Frag::P(x) => ls.push(x),
                    Frag::Q(_) => unreachable!(),
                }
            }
            certify_nonlift(&g, &ls).map_err(err)
        }
    }
}

/// Jacobi restriction: returns the kernel dimension and its expansions.
#[pyfunction]
#[pyo3(signature = (level, depth, detmax, eigen, weight=2, prime=None))]
fn restrict(
    level: i64,
    depth: i64,
    detmax: &Bound<'_, PyAny>,
    eigen: &str,
    weight: i64,
    prime: Option<u64>,
) -> PyResult<(usize, Vec<PyParamodularForm>)> {
    let eig = parse_eigen(eigen).map_err(err)?;
    let prob = RestrictionProblem::new(level, weight, depth, rat_arg(detmax)?, eig).map_err(err)?;
    let table = DimensionTable::established();
    let strategies = [Strategy::ThetaBlocks, Strategy::ThetaBlockProducts, Strategy::V2Images, Strategy::ExactQuotients];
    let mut bases = Vec::new();
    for j in 1..=depth {
        let opts = BasisOptions { prime: prime.unwrap_or(12347), ..BasisOptions::for_index(j * level) };
        bases.push(space_basis(weight, j * level, &strategies, &table, &opts).map_err(err)?.forms);
    }
    match prime {
        None => {
            let r = jrmj_basis(&prob, &bases).map_err(err)?;
            Ok((r.dimension, r.expansions.into_iter().map(|f| PyParamodularForm(Frag::Q(f))).collect()))
        }
        Some(p) => {
            let red = bases
                .iter()
                .map(|b| b.iter().map(|f| f.reduce_mod_p(p)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            let r = jrmj_basis(&prob, &red).map_err(err)?;
            Ok((r.dimension, r.expansions.into_iter().map(|f| PyParamodularForm(Frag::P(f))).collect()))
        }
    }
}

#[pymodule]
fn paramodular_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyThetaBlock>()?;
    m.add_class::<PyJacobiForm>()?;
    m.add_class::<PyWeakJacobiForm>()?;
    m.add_class::<PyBorcherdsProduct>()?;
    m.add_class::<PyParamodularForm>()?;
    m.add_function(wrap_pyfunction!(theta_search, m)?)?;
    m.add_function(wrap_pyfunction!(jacobi_basis, m)?)?;
    m.add_function(wrap_pyfunction!(inflate_psi, m)?)?;
    m.add_function(wrap_pyfunction!(is_nonlift, m)?)?;
    m.add_function(wrap_pyfunction!(restrict, m)?)?;
    Ok(())
}
