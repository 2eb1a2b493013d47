use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn map<T: Scalar>(x: &Tensor<T>, f: impl Fn(T) -> T) -> Tensor<T> {
    let values = x.values().iter().map(|&v| f(v)).collect();
    Tensor::new(x.shape().to_vec(), values).expect("same shape")
}

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    map(x, |v| if v > T::zero() { v } else { T::zero() })
}

pub fn tanh_act<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    map(x, |v| v.tanh())
}

pub fn softplus<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    map(x, softplus_scalar)
}

/// `ln(1 + e^x)`, returning `x` itself above 30.
pub fn softplus_scalar<T: Scalar>(x: T) -> T {
    if x > T::of(30.0) {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Derivative of [`softplus_scalar`], consistent with its cutoff.
pub(crate) fn softplus_grad<T: Scalar>(x: T) -> T {
    if x > T::of(30.0) {
        T::one()
    } else {
        T::one() / (T::one() + (-x).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn relu_values() {
        let t = Tensor::new(vec![2], vec![-2.0f64, 3.0]).unwrap();
        assert_eq!(relu(&t).values(), &[0.0, 3.0]);
    }

    #[test]
    fn softplus_values() {
        assert!((softplus_scalar(0.0f64) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(softplus_scalar(1000.0f64), 1000.0);
        assert!(softplus_scalar(-1000.0f64) >= 0.0);
        assert!(softplus_scalar(-20.0f32) > 0.0);
    }

    #[test]
    fn softplus_grad_matches_difference() {
        for x in [-5.0f64, -0.3, 0.0, 2.0, 29.0] {
            let h = 1e-6;
            let fd = (softplus_scalar(x + h) - softplus_scalar(x - h)) / (2.0 * h);
            assert!((fd - softplus_grad(x)).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn tanh_is_bounded(x in -50.0f64..50.0) {
            let y = tanh_act(&Tensor::new(vec![1], vec![x]).unwrap()).values()[0];
            prop_assert!(y.abs() <= 1.0);
            if x.abs() < 15.0 {
                prop_assert!(y.abs() < 1.0);
            }
        }
    }

    #[test]
    fn tanh_at_zero() {
        assert_eq!(tanh_act(&Tensor::new(vec![1], vec![0.0f32]).unwrap()).values()[0], 0.0);
    }
}
