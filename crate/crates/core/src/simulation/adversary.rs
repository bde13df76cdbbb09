//! What a global passive observer records about each message.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::projection::{GroupId, ProjectedMessage, Tick};

pub const LOG_HEADER: [&str; 5] = ["source_group", "dest_group", "t_send", "pickup_ticks", "size"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryRecord {
    pub source_group: GroupId,
    pub dest_group: GroupId,
    pub t_send: Tick,
    /// Distinct ticks at which the message was fetched, ascending.
    pub pickup_ticks: Vec<Tick>,
    pub size: f64,
}

impl From<&ProjectedMessage> for AdversaryRecord {
    fn from(msg: &ProjectedMessage) -> Self {
        let mut pickup_ticks: Vec<Tick> = msg.pickup_times.values().copied().collect();
        pickup_ticks.sort_unstable();
        pickup_ticks.dedup();
        Self {
            source_group: msg.source_group,
            dest_group: msg.dest_group,
            t_send: msg.t_send,
            pickup_ticks,
            size: msg.size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AdversaryLog {
    pub records: Vec<AdversaryRecord>,
}

impl AdversaryLog {
    pub fn from_messages<'a>(messages: impl IntoIterator<Item = &'a ProjectedMessage>) -> Self {
        Self { records: messages.into_iter().map(AdversaryRecord::from).collect() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(LOG_HEADER)?;
        for r in &self.records {
            let ticks = r.pickup_ticks.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(";");
            w.write_record([
                r.source_group.to_string(),
                r.dest_group.to_string(),
                r.t_send.to_string(),
                ticks,
                r.size.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, label: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.iter().ne(LOG_HEADER) {
            return Err(Error::Parse {
                path: label.to_path_buf(),
                line: 1,
                message: format!("expected header `{}`", LOG_HEADER.join(",")),
            });
        }
        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Parse { path: label.to_path_buf(), line, message };
            let num = |i: usize| -> Result<u64> {
                row[i].parse::<u64>().map_err(|e| bad(format!("column {}: {e}", LOG_HEADER[i])))
            };
            let group = |i: usize| -> Result<GroupId> {
                u32::try_from(num(i)?).map_err(|_| bad(format!("column {} exceeds the group range", LOG_HEADER[i])))
            };
            let pickup_ticks = if row[3].is_empty() {
                Vec::new()
            } else {
                row[3]
                    .split(';')
                    .map(|t| t.parse::<Tick>().map_err(|e| bad(format!("pickup tick `{t}`: {e}"))))
                    .collect::<Result<_>>()?
            };
            records.push(AdversaryRecord {
                source_group: group(0)?,
                dest_group: group(1)?,
                t_send: num(2)?,
                pickup_ticks,
                size: row[4].parse().map_err(|e| bad(format!("column size: {e}")))?,
            });
        }
        Ok(Self { records })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_csv(File::open(path)?, path)
    }
}

pub fn export_adversary_log(log: &AdversaryLog, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    log.write_csv(BufWriter::new(file))
}
