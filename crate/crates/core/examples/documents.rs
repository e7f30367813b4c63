//! Round trip through the JSON operator document and a measure record.

use yent::document::{operator_to_json, parse_operator, MeasureRecord};
use yent::measure::{entanglement_measure, ModePopulations};
use yent::norm::NormOptions;

fn main() -> yent::Result<()> {
    let rho = ModePopulations::new(vec![0.6, 0.4], 2)?.density_matrix(10)?;
    let text = operator_to_json(&rho);
    let back = parse_operator(&text)?;
    assert_eq!(back, rho);
    println!("operator document with norm_meta: {} bytes", text.len());

    let report = entanglement_measure(&back, &NormOptions::default())?;
    let record = MeasureRecord::from(&report);
    println!("{}", serde_json::to_string(&record).expect("serializable"));

    match parse_operator(r#"{"dims": [2, "x"], "entries": []}"#) {
        Err(e) => println!("malformed document: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
