use blockade::fock::{annihilator, creator, excitation_subspace, make_space, number_operator, Operator};
use blockade::C64;
use ndarray::Array2;
use proptest::prelude::*;

fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

#[test]
fn spaces_and_rejections() {
    assert_eq!(make_space(&[4, 4]).unwrap().total_dim(), 16);
    assert_eq!(make_space(&[4, 4, 2, 2]).unwrap().total_dim(), 64);
    assert!(make_space(&[4, 1]).is_err());
    assert!(make_space(&[]).is_err());
}

#[test]
fn ladder_on_top_state() {
    let s = make_space(&[4]).unwrap();
    let a = annihilator(&s, 0).unwrap();
    assert_eq!(a.matrix()[[2, 3]], C64::new(3f64.sqrt(), 0.0));
    assert!(annihilator(&s, 1).is_err());
}

#[test]
fn number_operator_trace_and_vacuum() {
    let s = make_space(&[4]).unwrap();
    let n = number_operator(&s, 0).unwrap();
    assert_eq!(n.matrix().diag().sum(), C64::new(6.0, 0.0));
    let mut vac = Array2::zeros((4, 4));
    vac[[0, 0]] = C64::new(1.0, 0.0);
    assert_eq!(n.expectation(&vac), C64::new(0.0, 0.0));
}

#[test]
fn sector_sizes() {
    let s = make_space(&[4, 4]).unwrap();
    assert_eq!(excitation_subspace(&s, 0), vec![0]);
    assert_eq!(excitation_subspace(&s, 1).len(), 2);
    assert_eq!(excitation_subspace(&s, 2).len(), 3);
    assert!(excitation_subspace(&s, 7).is_empty());
}

fn dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..5, 1..4)
}

proptest! {
    #[test]
    fn commutator_deviates_only_at_the_top(dims in dims(), pick in 0usize..4) {
        let s = make_space(&dims).unwrap();
        let mode = pick % dims.len();
        let a = annihilator(&s, mode).unwrap();
        let c = a.commutator(&creator(&s, mode).unwrap()).unwrap();
        let top = dims[mode] - 1;
        for i in 0..s.total_dim() {
            for j in 0..s.total_dim() {
                let z = c.matrix()[[i, j]];
                let want = if i != j {
                    0.0
                } else if s.occupation(i, mode) == top {
                    -(top as f64)
                } else {
                    1.0
                };
                prop_assert!((z - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn subspaces_partition_the_basis(dims in dims()) {
        let s = make_space(&dims).unwrap();
        let mut seen = vec![0usize; s.total_dim()];
        for n in 0..=s.max_excitations() {
            let idx = excitation_subspace(&s, n);
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            for i in idx {
                prop_assert_eq!(s.excitations(i), n);
                seen[i] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn products_adjoint_and_associate(dims in dims(), p in 0usize..4, q in 0usize..4, r in 0usize..4) {
        let s = make_space(&dims).unwrap();
        let m = dims.len();
        let a = annihilator(&s, p % m).unwrap();
        let b = &creator(&s, q % m).unwrap() * C64::new(0.3, -1.1);
        let c = &number_operator(&s, r % m).unwrap() + &Operator::identity(&s);
        let lhs = a.compose(&b).unwrap().adjoint();
        let rhs = b.adjoint().compose(&a.adjoint()).unwrap();
        prop_assert!(max_abs(&(lhs.matrix() - rhs.matrix())) < 1e-12);
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        prop_assert!(max_abs(&(left.matrix() - right.matrix())) < 1e-12);
        prop_assert_eq!(a.adjoint().adjoint(), a);
    }

    #[test]
    fn number_operator_is_a_dagger_a(dims in dims(), pick in 0usize..4) {
        let s = make_space(&dims).unwrap();
        let mode = pick % dims.len();
        let a = annihilator(&s, mode).unwrap();
        let n = number_operator(&s, mode).unwrap();
        let ada = a.adjoint().compose(&a).unwrap();
        prop_assert!(max_abs(&(ada.matrix() - n.matrix())) <= 4.0 * f64::EPSILON * dims[mode] as f64);
    }
}
