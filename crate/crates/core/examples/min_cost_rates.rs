//! Cheapest service rates for a chain of single instances under a delay
//! budget, compared with a coarse grid search.

use nfv_planner::exact::min_cost_rates;

fn main() {
    let incoming = [3.0, 2.7, 2.7];
    let max_rate = [6.0, 6.0, 4.0];
    let costs = [1.0, 4.0, 0.5];
    let budget = 2.0;

    let mu = min_cost_rates(&incoming, &max_rate, &costs, budget).expect("feasible");
    let cost = |mu: &[f64]| mu.iter().zip(&costs).map(|(m, c)| m * c).sum::<f64>();
    let delay: f64 = mu.iter().zip(&incoming).map(|(m, i)| 1.0 / (m - i)).sum();
    println!("rates {mu:.4?}  cost {:.4}  delay {delay:.4} ms", cost(&mu));

    // Spend the budget in fractions of 1/steps on the first two instances and
    // give the rest to the third.
    let steps = 400;
    let mut best = f64::INFINITY;
    for i in 1..steps {
        for j in 1..steps - i {
            let d = [i, j, steps - i - j].map(|x| budget * x as f64 / steps as f64);
            let trial: Vec<f64> = (0..3).map(|q| incoming[q] + 1.0 / d[q]).collect();
            if trial.iter().zip(&max_rate).all(|(m, max)| m <= max) {
                best = best.min(cost(&trial));
            }
        }
    }
    println!("grid search best cost {best:.4}");

    match min_cost_rates(&incoming, &max_rate, &costs, 0.5) {
        Ok(mu) => println!("0.5 ms budget: {mu:?}"),
        Err(e) => println!("0.5 ms budget: {e}"),
    }
}
