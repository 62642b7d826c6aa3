//! Sweeps the rating noise of the synthetic campaign and reports how often
//! the per-run RMS~RQI fit has a negative slope with r2 > 0.7.
//!
//! cargo run --release -p pavecheck-core --example rqi_noise_pilot

use pavecheck::correlation::{correlate_indices, CorrelationInputs};
use pavecheck::roughness::{section_rms_table, IriModel, RmsTable};
use pavecheck::segment::{assign_sections, SegmentConfig};
use pavecheck::synth::{gen_campaign, CampaignSpec};

const SEEDS: u64 = 200;

fn main() -> pavecheck::Result<()> {
    println!("noise_sd  pass_rate  min_r2  median_r2");
    for noise in [0.3, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0] {
        let mut r2s = Vec::new();
        let mut pass = 0;
        for seed in 0..SEEDS {
            let c = gen_campaign(&CampaignSpec {
                rating_noise_sd: noise,
                seed,
                ..Default::default()
            })?;
            let mut tables = Vec::new();
            for t in &c.traces {
                let a = assign_sections(t, &c.layout, &SegmentConfig::default())?;
                tables.push(section_rms_table(&a.runs, t.gravity_mps2(), &IriModel::default())?);
            }
            let table = RmsTable::merge(tables);
            let corr = correlate_indices(
                &CorrelationInputs {
                    rms: &table.rows,
                    ratings: Some(&c.ratings),
                    ..Default::default()
                },
                true,
            )?;
            let fit = corr.rms_rqi.expect("ratings given");
            let r2 = fit.r2.unwrap_or(0.0);
            if fit.slope < 0.0 && r2 > 0.7 {
                pass += 1;
            }
            r2s.push(r2);
        }
        r2s.sort_by(f64::total_cmp);
        println!(
            "{noise:8.2}  {:9.3}  {:6.3}  {:9.3}",
            pass as f64 / SEEDS as f64,
            r2s[0],
            r2s[r2s.len() / 2]
        );
    }
    Ok(())
}
