use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use num_integer::Integer;
use proptest::prelude::*;

use paramodular::field::{Field, PrimeField, Rat, Rationals};
use paramodular::jacobi::{gritsenko_lift, v2, BasisSource, JacobiFormFragment};
use paramodular::linalg::{Echelon, IntegralLattice, SparseMatrix};
use paramodular::paramodular::{
    al_index, fricke_index, polarize, reduce, ALMatrix, FourierIndex, IndexWindow, ParamodularFragment,
};
use paramodular::series::PuiseuxSeries;
use paramodular::store::{CoeffDB, JacobiDB};
use paramodular::theta::{search, ThetaBlock};

const P: u64 = 12347;

fn fp() -> PrimeField {
    PrimeField::new(P).unwrap()
}

fn rat() -> impl Strategy<Value = Rat> {
    (-50i64..=50, 1i64..=12).prop_map(|(a, b)| Rat::new(a, b))
}

fn series(lead: bool) -> impl Strategy<Value = PuiseuxSeries<PrimeField>> {
    prop::collection::vec((0i64..=4, -3i64..=3, 0u64..P), 1..12).prop_map(move |terms| {
        let f = fp();
        let mut terms: Vec<(i64, i64, u64)> = terms.into_iter().map(|(a, b, c)| (24 * a, 2 * b, c)).collect();
        if lead {
            terms.push((0, 0, 1));
        }
        PuiseuxSeries::from_terms(f, 96, terms.into_iter().map(|(a, b, c)| (a, b, c)))
    })
}

fn index(level: i64) -> impl Strategy<Value = FourierIndex> {
    (1i64..=30, 1i64..=30, any::<u32>()).prop_map(move |(n, m, s)| {
        let rmax = (((4 * n * m * level - 1) as f64).sqrt()) as i64;
        let r = (s as i64 % (2 * rmax + 1)) - rmax;
        FourierIndex::new(level, n, r, m).unwrap()
    })
}

/// `A t A^T` for `A = [[a, b], [c, d]]`.
fn act(level: i64, t: FourierIndex, a: i64, b: i64, c: i64, d: i64) -> FourierIndex {
    let (n, r, mn) = (t.n, t.r, t.m * level);
    let n2 = a * a * n + a * b * r + b * b * mn;
    let r2 = 2 * a * c * n + (a * d + b * c) * r + 2 * b * d * mn;
    let m2 = c * c * n + c * d * r + d * d * mn;
    FourierIndex::new(level, n2, r2, m2 / level).unwrap()
}

fn blocks(index: i64) -> Vec<JacobiFormFragment<Rationals>> {
    search(2, index, 10)
        .unwrap()
        .into_iter()
        .filter(|b| b.min_order() > Rat::zero())
        .map(|b| BasisSource::Block(b.to_quotient()).expand(Rationals, 2, index, 12).unwrap())
        .collect()
}

/// Lift over a small box closed under the Atkin-Lehner words at 74.
fn level_74_lift() -> &'static ParamodularFragment<Rationals> {
    static LIFT: OnceLock<ParamodularFragment<Rationals>> = OnceLock::new();
    LIFT.get_or_init(|| {
        let w2 = ALMatrix::new(74, 2).unwrap();
        let w37 = ALMatrix::new(74, 37).unwrap();
        let mut cover = BTreeSet::new();
        for t in (IndexWindow { n_max: 2, m_max: 2 }).indices(74) {
            let b = al_index(t, &w37).unwrap();
            cover.extend([t, al_index(t, &w2).unwrap(), b, al_index(b, &w2).unwrap()]);
        }
        let cover: Vec<_> = cover.into_iter().collect();
        let phi = ThetaBlock::new(-6, vec![1, 1, 2, 2, 3, 4, 4, 5, 6, 6]).unwrap();
        let phi = BasisSource::Block(phi.to_quotient()).expand(Rationals, 2, 74, 30).unwrap();
        gritsenko_lift(&phi, &cover).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prime_field_axioms(a in 0u64..P, b in 0u64..P, c in 0u64..P) {
        let f = fp();
        prop_assert_eq!(f.mul(&a, &f.add(&b, &c)), f.add(&f.mul(&a, &b), &f.mul(&a, &c)));
        prop_assert_eq!(f.mul(&f.mul(&a, &b), &c), f.mul(&a, &f.mul(&b, &c)));
        prop_assert_eq!(f.add(&a, &f.neg(&a)), f.zero());
        if a != 0 {
            prop_assert_eq!(f.mul(&a, &f.inv(&a).unwrap()), f.one());
        }
    }

    #[test]
    fn rational_field_axioms(a in rat(), b in rat(), c in rat()) {
        let f = Rationals;
        prop_assert_eq!(f.mul(&a, &f.add(&b, &c)), f.add(&f.mul(&a, &b), &f.mul(&a, &c)));
        prop_assert_eq!(f.sub(&f.add(&a, &b), &b), a.clone());
        if !a.is_zero() {
            prop_assert_eq!(f.mul(&a, &f.inv(&a).unwrap()), f.one());
        }
        prop_assert_eq!(f.parse(&f.format(&a)).unwrap(), a);
    }

    #[test]
    fn series_product_commutes_and_divides_back(a in series(false), b in series(true)) {
        let ab = a.mul(&b).unwrap();
        prop_assert_eq!(&ab, &b.mul(&a).unwrap());
        let q = ab.div_exact(&b).unwrap();
        prop_assert!(q.trunc() >= 96);
        prop_assert_eq!(q.truncate(96), a.truncate(96));
    }

    #[test]
    fn reduction_is_invariant(t in index(74), c0 in -3i64..=3, d in -7i64..=7, s in any::<bool>()) {
        let level = 74;
        let c = c0 * level;
        prop_assume!(c.gcd(&d) == 1);
        let e = d.extended_gcd(&c);
        // a d - b c = 1
        let (a, b) = (e.x, -e.y);
        let u = act(level, t, a, b, c, d);
        let u = if s { FourierIndex::new(level, u.n, -u.r, u.m).unwrap() } else { u };
        let (rt, _) = reduce(level, t);
        prop_assert_eq!(reduce(level, u).0, rt);
        prop_assert_eq!(reduce(level, rt).0, rt);
        prop_assert_eq!(rt.disc(level), t.disc(level));
    }

    #[test]
    fn atkin_lehner_matrices_square_to_the_class(t in index(74)) {
        for c in [2, 37, 74] {
            let w = ALMatrix::new(74, c).unwrap();
            let back = al_index(al_index(t, &w).unwrap(), &w).unwrap();
            prop_assert_eq!(reduce(74, back).0, reduce(74, t).0);
        }
        prop_assert_eq!(fricke_index(fricke_index(t)), t);
    }

    #[test]
    fn echelon_rank_nullity(rows in prop::collection::vec(prop::collection::vec(0u64..7, 6), 0..8)) {
        let f = fp();
        let m = SparseMatrix::from_dense(f.clone(), 6, &rows);
        let ker = m.kernel();
        prop_assert_eq!(m.rank() + ker.len(), 6);
        for k in &ker {
            for r in &rows {
                let dot = r.iter().zip(k).fold(0, |acc, (x, y)| f.add(&acc, &f.mul(x, y)));
                prop_assert_eq!(dot, 0);
            }
        }
        let mut e = Echelon::new(f, 6);
        for r in &rows {
            e.insert(r);
        }
        for r in &rows {
            prop_assert!(e.contains(r));
        }
    }

    #[test]
    fn saturation_keeps_rank_mod_p(rows in prop::collection::vec(prop::collection::vec(-1000i64..=1000, 4), 1..5), k in 1i64..=6) {
        let mut rows = rows;
        for x in rows[0].iter_mut() {
            *x *= k;
        }
        let s = IntegralLattice::from_i64(4, &rows).saturate();
        prop_assert!(s.is_saturated());
        for p in [2, 3, 5, P] {
            prop_assert_eq!(s.rank_mod_p(p), s.rank());
        }
    }

    #[test]
    fn coeff_db_round_trip(entries in prop::collection::vec((index(37), rat()), 0..20)) {
        let mut f = ParamodularFragment::new(Rationals, 37, 2);
        for (t, v) in entries {
            f.insert(t, v).unwrap();
        }
        let f = f.with_eigen(BTreeMap::from([(37, -1)])).unwrap();
        let text = CoeffDB::from_fragment(&f, "test").serialize();
        let back = CoeffDB::parse(&text).unwrap();
        prop_assert_eq!(back.serialize(), text);
        prop_assert_eq!(back.to_fragment(Rationals).unwrap(), f.clone());
        let g = f.map_field(fp(), |x| fp().from_rat(x)).unwrap();
        let gb = CoeffDB::parse(&CoeffDB::from_fragment(&g, "test").serialize()).unwrap();
        prop_assert_eq!(gb.to_fragment(fp()).unwrap(), g);
    }

    #[test]
    fn theta_block_text_round_trip(i in 0usize..40) {
        let bs = search(2, 74, 10).unwrap();
        let b = &bs[i % bs.len()];
        let back: ThetaBlock = b.to_string().parse().unwrap();
        prop_assert_eq!(&back, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn jacobi_db_round_trip_and_linearity(x in rat(), y in rat(), i in 0usize..8, j in 0usize..8) {
        let bs = blocks(74);
        let (f, g) = (&bs[i % bs.len()], &bs[j % bs.len()]);
        let h = f.scale(&x).add_scaled(g, &y).unwrap();
        let back = JacobiDB::parse(&JacobiDB::from_form(&h).serialize()).unwrap().to_form(Rationals).unwrap();
        prop_assert_eq!(&back, &h);

        let cover = IndexWindow { n_max: 3, m_max: 2 }.indices(74);
        let lh = gritsenko_lift(&h, &cover).unwrap();
        let lf = gritsenko_lift(f, &cover).unwrap();
        let lg = gritsenko_lift(g, &cover).unwrap();
        let combo = ParamodularFragment::combine(&[&lf, &lg], &[x.clone(), y.clone()]).unwrap();
        prop_assert_eq!(lh.coeffs(), combo.coeffs());

        let vh = v2(&h, 4).unwrap();
        let vc = v2(f, 4).unwrap().scale(&x).add_scaled(&v2(g, 4).unwrap(), &y).unwrap();
        prop_assert_eq!(vh, vc);
    }

    #[test]
    fn polarize_is_an_idempotent_projection(x in rat(), e2 in prop::sample::select(vec![1i8, -1]), en in prop::sample::select(vec![1i8, -1])) {
        let f = ParamodularFragment::combine(&[level_74_lift()], &[x]).unwrap();
        let p = polarize(&f, e2, en).unwrap();
        let pp = polarize(&p, e2, en).unwrap();
        prop_assert_eq!(pp.coeffs(), p.coeffs());
        // the four projections sum back to f
        let parts: Vec<_> = [(1, 1), (1, -1), (-1, 1), (-1, -1)].iter().map(|&(a, b)| polarize(&f, a, b).unwrap()).collect();
        let refs: Vec<_> = parts.iter().collect();
        let ones = vec![Rat::one(); 4];
        let sum = ParamodularFragment::combine(&refs, &ones).unwrap();
        prop_assert_eq!(sum.coeffs(), f.coeffs());
    }
}
