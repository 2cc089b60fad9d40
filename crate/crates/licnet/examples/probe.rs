use licnet::probability::{ChannelMatrix, ProbabilityVector};
use licnet::dtm::{build_dtm, second_singular};
use licnet::singlehop::bc_parameters;

fn main() {
    let dtm = build_dtm(&ChannelMatrix::identity(3), &ProbabilityVector::uniform(3)).unwrap();
    let sol = second_singular(&dtm).unwrap();
    println!("identity3: sigma={} degenerate={}", sol.value, sol.degenerate);

    for alpha in [0.1_f64, 0.2, 0.35] {
        let w1 = ChannelMatrix::new(vec![
            vec![0.5, 0.5, 1.0 - alpha, alpha],
            vec![0.5, 0.5, alpha, 1.0 - alpha],
        ]).unwrap();
        let w2 = ChannelMatrix::new(vec![
            vec![1.0 - alpha, alpha, 0.5, 0.5],
            vec![alpha, 1.0 - alpha, 0.5, 0.5],
        ]).unwrap();
        let bc = bc_parameters(&w1, &w2, &ProbabilityVector::uniform(4)).unwrap();
        println!("alpha={alpha}: s0={:.15} want={:.15} gap={:.3e}",
            bc.sigma0_sq, 0.25*(1.0-2.0*alpha)*(1.0-2.0*alpha), bc.gap);
    }
}
