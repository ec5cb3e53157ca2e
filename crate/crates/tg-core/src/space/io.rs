//! Genome files: line-delimited JSON, one genome per line, field names
//! matching the genome types.

use super::{Genome, SpaceError};
use std::io::{BufRead, BufReader, Read, Write};

/// Writes genomes as JSON lines.
pub fn write_genomes_jsonl<W: Write>(mut w: W, genomes: &[Genome]) -> Result<(), SpaceError> {
    for genome in genomes {
        let line = serde_json::to_string(genome)
            .map_err(|e| SpaceError::Parse { line: 0, message: e.to_string() })?;
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads genomes from JSON lines; blank lines are skipped.
pub fn read_genomes_jsonl<R: Read>(r: R) -> Result<Vec<Genome>, SpaceError> {
    let reader = BufReader::new(r);
    let mut genomes = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let genome: Genome = serde_json::from_str(&line)
            .map_err(|e| SpaceError::Parse { line: idx + 1, message: e.to_string() })?;
        genomes.push(genome);
    }
    Ok(genomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{CellSpace, Space};

    #[test]
    fn jsonl_round_trip_preserves_genomes() {
        let micro = Space::micro();
        let cell = Space::Cell(CellSpace::default());
        let genomes: Vec<Genome> = (0..10)
            .map(|s| micro.sample_uniform(s))
            .chain((0..10).map(|s| cell.sample_uniform(s)))
            .collect();
        let mut buf = Vec::new();
        write_genomes_jsonl(&mut buf, &genomes).unwrap();
        let back = read_genomes_jsonl(&buf[..]).unwrap();
        assert_eq!(back, genomes);
    }

    #[test]
    fn field_names_match_type_definitions() {
        let g = Space::micro().sample_uniform(1);
        let json = serde_json::to_string(&g).unwrap();
        for field in ["num_layers", "layers", "connections", "filters", "kernel_h", "stride"] {
            assert!(json.contains(field), "missing {field} in {json}");
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let data = b"{\"num_layers\": 1\n";
        match read_genomes_jsonl(&data[..]) {
            Err(SpaceError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
