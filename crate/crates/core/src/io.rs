//! CSV and JSON file plumbing with header validation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interaction::{Interaction, InteractionTable};

pub const INTERACTION_HEADER: &[&str] = &[
    "game_id",
    "play_id",
    "event_game_index",
    "week",
    "rusher_id",
    "blocker_id",
    "double_team",
    "win_target",
    "severity",
];

/// Reads a headed CSV, requiring every column in `required` to be present.
pub fn read_csv<R: DeserializeOwned>(path: impl AsRef<Path>, required: &[&str]) -> Result<Vec<R>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let missing: Vec<_> = required.iter().filter(|h| !headers.iter().any(|x| x == **h)).collect();
    if !missing.is_empty() {
        return Err(Error::Schema {
            path: path.display().to_string(),
            expected: required.join(","),
            found: headers.iter().collect::<Vec<_>>().join(","),
        });
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, rec)| {
            rec.map_err(|e| Error::Parse { path: path.display().to_string(), message: format!("row {}: {e}", i + 1) })
        })
        .collect()
}

/// Writes `rows` under an explicit header, then re-reads the file and checks
/// that the header on disk matches.
pub fn write_csv<S: Serialize>(
    path: impl AsRef<Path>,
    header: &[&str],
    rows: impl IntoIterator<Item = S>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    wtr.write_record(header).map_err(|e| Error::csv(path, e))?;
    for r in rows {
        wtr.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    drop(wtr);
    check_csv_header(path, header)
}

pub fn check_csv_header(path: impl AsRef<Path>, header: &[&str]) -> Result<()> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let found = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    let found_vec: Vec<&str> = found.iter().collect();
    if found_vec != header {
        return Err(Error::Schema {
            path: path.display().to_string(),
            expected: header.join(","),
            found: found_vec.join(","),
        });
    }
    for rec in rdr.records() {
        rec.map_err(|e| Error::csv(path, e))?;
    }
    Ok(())
}

pub fn write_json<S: Serialize + ?Sized>(path: impl AsRef<Path>, value: &S) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<D: DeserializeOwned>(path: impl AsRef<Path>) -> Result<D> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

pub fn read_interactions(path: impl AsRef<Path>) -> Result<InteractionTable> {
    let rows: Vec<Interaction> = read_csv(path, INTERACTION_HEADER)?;
    Ok(InteractionTable::new(rows))
}

pub fn write_interactions(path: impl AsRef<Path>, table: &InteractionTable) -> Result<()> {
    write_csv(path, INTERACTION_HEADER, table.iter())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::OutcomeClass;

    #[test]
    fn interaction_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i.csv");
        let mut r = crate::interaction::row("g1", "p7", 3, "r1", "b2");
        r.double_team = true;
        r.severity = OutcomeClass::Hit;
        let table = InteractionTable::new(vec![r]);
        write_interactions(&path, &table).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "game_id,play_id,event_game_index,week,rusher_id,blocker_id,double_team,win_target,severity\n\
             g1,p7,3,1,r1,b2,1,0,hit\n"
        );
        assert_eq!(read_interactions(&path).unwrap(), table);
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "game_id,play_id\n1,2\n").unwrap();
        assert!(matches!(read_interactions(&path), Err(Error::Schema { .. })));
    }

    #[test]
    fn bad_boolean_is_a_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(
            &path,
            "game_id,play_id,event_game_index,week,rusher_id,blocker_id,double_team,win_target,severity\n\
             g,p,0,1,r,b,2,0,loss\n",
        )
        .unwrap();
        assert!(matches!(read_interactions(&path), Err(Error::Parse { .. })));
    }
}
