use crate::error::{NnError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

fn check<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<()> {
    if pred.shape() != target.shape() || pred.is_empty() {
        return Err(NnError::Shape(format!(
            "l1 loss on {:?} vs {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    Ok(())
}

/// Mean absolute difference over every entry.
pub fn l1_loss<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<T> {
    check(pred, target)?;
    let sum: T = pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(&p, &t)| (p - t).abs())
        .sum();
    Ok(sum / T::of(pred.len() as f64))
}

/// `sign(pred - target) / n`, with `sign(0) = 0`.
pub fn l1_loss_grad<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<Tensor<T>> {
    check(pred, target)?;
    let scale = T::one() / T::of(pred.len() as f64);
    let values = pred
        .values()
        .iter()
        .zip(target.values())
        .map(|(&p, &t)| {
            let d = p - t;
            if d > T::zero() {
                scale
            } else if d < T::zero() {
                -scale
            } else {
                T::zero()
            }
        })
        .collect();
    Tensor::new(pred.shape().to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: Vec<f64>) -> Tensor<f64> {
        Tensor::new(vec![1, v.len()], v).unwrap()
    }

    #[test]
    fn identical_inputs_give_zero() {
        let a = t((0..12).map(f64::from).collect());
        assert_eq!(l1_loss(&a, &a).unwrap(), 0.0);
        assert!(l1_loss_grad(&a, &a).unwrap().values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn mean_of_absolute_entries() {
        let p = t((1..=12).map(f64::from).collect());
        let z = t(vec![0.0; 12]);
        assert!((l1_loss(&p, &z).unwrap() - 6.5).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_central_difference() {
        let p: Vec<f64> = (0..24).map(|k| (k as f64 * 0.37).sin()).collect();
        let q: Vec<f64> = (0..24).map(|k| (k as f64 * 0.11).cos()).collect();
        let pred = Tensor::new(vec![2, 12], p.clone()).unwrap();
        let target = Tensor::new(vec![2, 12], q).unwrap();
        let g = l1_loss_grad(&pred, &target).unwrap();
        let h = 1e-6;
        for i in 0..24 {
            let mut a = pred.clone();
            a.values_mut()[i] += h;
            let mut b = pred.clone();
            b.values_mut()[i] -= h;
            let fd = (l1_loss(&a, &target).unwrap() - l1_loss(&b, &target).unwrap()) / (2.0 * h);
            assert!((fd - g.values()[i]).abs() < 1e-9);
            assert!((g.values()[i].abs() - 1.0 / 24.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_mismatch() {
        let a = Tensor::<f64>::zeros(vec![1, 12]);
        let b = Tensor::<f64>::zeros(vec![2, 12]);
        assert!(matches!(l1_loss(&a, &b), Err(NnError::Shape(_))));
    }
}
