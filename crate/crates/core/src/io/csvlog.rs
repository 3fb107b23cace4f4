//! Plain CSV logs with the columns `case_id,activity,order`.

use std::collections::HashMap;

use serde::Deserialize;

use super::ModelIoError;
use crate::eventlog::{EventLog, Trace};

#[derive(Debug, Deserialize)]
struct Row {
    case_id: String,
    activity: String,
    order: i64,
}

/// Groups rows by case (first-appearance order) and sorts each case by the
/// `order` column; ties keep file order.
pub fn parse_csv_log(input: &[u8], source_name: &str) -> Result<EventLog, ModelIoError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut cases: Vec<(String, Vec<(i64, String)>)> = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| ModelIoError::Csv(e.to_string()))?;
        let slot = *index.entry(row.case_id.clone()).or_insert_with(|| {
            cases.push((row.case_id.clone(), Vec::new()));
            cases.len() - 1
        });
        cases[slot].1.push((row.order, row.activity));
    }
    let traces = cases
        .into_iter()
        .map(|(case_id, mut events)| {
            events.sort_by_key(|(o, _)| *o);
            Trace {
                case_id,
                activities: events.into_iter().map(|(_, a)| a).collect(),
            }
        })
        .collect();
    Ok(EventLog::new(source_name, traces))
}
