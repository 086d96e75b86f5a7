//! Latent-driven channel modulation: the same feature map under two codes.

use autograd::{Array, Var};
use icgan::models::{make_latent, latent_batch, Z_DIM};
use icgan::nn::{ParamSet, SsBlock};
use icgan::seed;
use rand::Rng;

fn main() -> icgan::Result<()> {
    let ss = SsBlock::new("ss", Z_DIM, 4);
    let mut ps = ParamSet::<f64>::new();
    ss.init(&mut ps);
    println!("{} parameters, identity at init", ss.param_count());

    let mut rng = seed::stream(1, "ssblock-example", 0);
    let x = Array::from_f64(&[1, 4, 2, 2], &(0..16).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())?;
    let codes = [make_latent(Some(3), None, &mut rng)?, make_latent(Some(8), None, &mut rng)?];

    let same = ss.forward(&ps.bind(false), &Var::constant(x.clone()), &Var::constant(latent_batch(&codes[..1])))?;
    println!("identity holds: {}", same.value() == &x);

    // give the maps some weight so the codes matter
    for name in ["ss.alpha.w", "ss.beta.w"] {
        let w = ps.get_mut(name).unwrap();
        w.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
    }
    let p = ps.bind(false);
    for code in &codes {
        let z = Var::constant(latent_batch(std::slice::from_ref(code)));
        let (a, b) = ss.coefficients(&p, &z)?;
        let y = ss.forward(&p, &Var::constant(x.clone()), &z)?;
        println!("digit {}: alpha {:.3?}", code.digit, a.value().data());
        println!("         beta  {:.3?}", b.value().data());
        println!("         out[0] {:.3?}", &y.value().data()[..4]);
    }
    Ok(())
}
