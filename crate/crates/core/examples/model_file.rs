// Models round-trip through JSON; the file form is what `cm2 --model`
// reads.

use cm2::model::ModelFile;
use cm2::presets;

pub fn run_example() -> cm2::Result<String> {
    let model = presets::two_qubit_model(0.3, 0.3, 0.1)?;
    let text = ModelFile::from_model(&model).to_json();
    let back = ModelFile::from_json(&text)?.into_model()?;
    let report = back.validate();
    println!("{} bytes, valid: {}", text.len(), report.valid);
    for unit in back.rank_deficient_units() {
        println!("unit {unit} is rank deficient; its flux diverges");
    }
    println!("{}", &text[..text.len().min(200)]);
    Ok(text)
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
