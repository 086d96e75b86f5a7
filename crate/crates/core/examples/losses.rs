//! Closed-form cases of the adversarial and information losses.

use autograd::{Array, Var};
use icgan::losses::*;
use icgan::seed;

fn v(shape: &[usize], d: &[f64]) -> Var<f64> {
    Var::constant(Array::from_f64(shape, d).unwrap())
}

fn main() -> icgan::Result<()> {
    let real = v(&[2, 1, 1, 2], &[0.1, 0.9, 0.4, 0.3]);
    let fake = v(&[2, 1, 1, 2], &[0.7, 0.2, 0.5, 0.8]);
    let eps = sample_epsilon::<f64>(2, &mut seed::stream(0, "losses-example", 0));
    let u = v(&[1, 1, 1, 2], &[0.6, 0.8]);
    let linear = |s: f64| {
        let u = u.clone();
        move |x: &Var<f64>| Ok(x.mul(&u)?.sum_to(&[2, 1, 1, 1])?.reshape(&[2])?.scale(s))
    };
    println!("GP, unit-slope critic:   {:.6}", gradient_penalty(linear(1.0), &real, &fake, &eps, 10.0)?.item());
    println!("GP, double-slope critic: {:.6}", gradient_penalty(linear(2.0), &real, &fake, &eps, 10.0)?.item());
    println!("GP, constant critic:     {:.6}", gradient_penalty(linear(0.0), &real, &fake, &eps, 10.0)?.item());

    let onehot = v(&[1, 10], &[0., 0., 1., 0., 0., 0., 0., 0., 0., 0.]);
    println!("CE, uniform logits: {:.9} (ln 10 = {:.9})", categorical_loss(&onehot, &v(&[1, 10], &[0.0; 10]))?.item(), 10f64.ln());
    println!("MSE (1,0,0) vs 0:   {:.6}", continuous_loss(&v(&[1, 3], &[1., 0., 0.]), &v(&[1, 3], &[0.0; 3]))?.item());
    println!("critic loss, fake 1 real 0: {}", critic_loss(&v(&[2], &[1., 1.]), &v(&[2], &[0., 0.]))?.item());
    Ok(())
}
