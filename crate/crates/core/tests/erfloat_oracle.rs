use std::cmp::Ordering;

use growth_lab::ExtendedReal;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pow2(e: i64) -> BigRational {
    let one = BigInt::one();
    if e >= 0 {
        BigRational::from_integer(one << e as usize)
    } else {
        BigRational::new(one.clone(), one << (-e) as usize)
    }
}

fn exact(x: &ExtendedReal) -> BigRational {
    if x.is_zero() {
        return BigRational::zero();
    }
    BigRational::from_float(x.significand()).unwrap() * pow2(x.exponent())
}

fn random_value(rng: &mut ChaCha8Rng, near: Option<i64>) -> ExtendedReal {
    let sig: f64 = rng.gen_range(1.0..2.0) * if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
    let exp = match near {
        Some(e) => e + rng.gen_range(-70..=70),
        None => rng.gen_range(-3000..=3000),
    };
    if rng.gen_ratio(1, 200) {
        ExtendedReal::ZERO
    } else {
        ExtendedReal::from_parts(sig, exp)
    }
}

#[test]
fn ordering_matches_exact_rationals() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100_000 {
        let a = random_value(&mut rng, None);
        let near = if i % 2 == 0 { Some(a.exponent()) } else { None };
        let b = if i % 7 == 0 { a } else { random_value(&mut rng, near) };
        let got = a.partial_cmp(&b).unwrap();
        assert_eq!(got, exact(&a).cmp(&exact(&b)), "{a:?} vs {b:?}");
    }
}

#[test]
fn addition_is_correctly_rounded_or_absorbs_tiny_operands() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let eps = pow2(-53);
    for _ in 0..100_000 {
        let a = random_value(&mut rng, None);
        let b = random_value(&mut rng, Some(a.exponent()));
        let sum = a + b;
        let want = exact(&a) + exact(&b);
        let err = (exact(&sum) - &want).abs();
        let gap = (a.exponent() - b.exponent()).abs();
        if gap <= 64 || a.is_zero() || b.is_zero() {
            assert!(err <= &eps * want.abs(), "{a:?} + {b:?} = {sum:?}");
        } else {
            let (hi, lo) = if a.exponent() > b.exponent() { (a, b) } else { (b, a) };
            assert_eq!(sum, hi);
            assert!(exact(&lo).abs() < pow2(-63) * exact(&hi).abs());
        }
        if !sum.is_zero() {
            assert!((1.0..2.0).contains(&sum.significand().abs()));
        }
    }
    assert_eq!(exact(&ExtendedReal::ONE).cmp(&BigRational::one()), Ordering::Equal);
}
