//! CSV readers and writers for networks, requests and vehicles.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::model::{Request, RequestId, VehicleId, VehicleState};
use crate::network::{ArcRecord, Network, NetworkError, NodeId, NodeRecord};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}: {source}")]
    Csv { file: String, source: csv::Error },
    #[error("{file}: missing column `{column}`")]
    MissingColumn { file: String, column: &'static str },
    #[error("{file} row {row}: bad value `{value}` in column `{column}`")]
    BadValue {
        file: String,
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("{file} row {row}: {message}")]
    Invalid { file: String, row: usize, message: String },
    #[error("{file}: {source}")]
    Network { file: String, source: NetworkError },
}

struct Table {
    file: String,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(file: &str, input: impl Read) -> Result<Table, DataError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let csv_err = |source| DataError::Csv { file: file.to_string(), source };
        let headers = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let rows = rdr.records().collect::<Result<Vec<_>, _>>().map_err(csv_err)?;
        Ok(Table { file: file.to_string(), headers, rows })
    }

    fn open(path: &Path) -> Result<Table, DataError> {
        let f = File::open(path).map_err(|source| DataError::Open { path: path.to_path_buf(), source })?;
        Table::read(&path.display().to_string(), f)
    }

    fn column(&self, name: &'static str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    fn require(&self, name: &'static str) -> Result<usize, DataError> {
        self.column(name).ok_or(DataError::MissingColumn { file: self.file.clone(), column: name })
    }

    /// Parses cell `col` of data row `row` (0-based); empty cells are `None`.
    fn get<T: FromStr>(&self, row: usize, col: Option<usize>, name: &'static str) -> Result<Option<T>, DataError> {
        let Some(c) = col else { return Ok(None) };
        let raw = self.rows[row].get(c).unwrap_or("");
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse().map(Some).map_err(|_| DataError::BadValue {
            file: self.file.clone(),
            row: row + 1,
            column: name,
            value: raw.to_string(),
        })
    }

    fn need<T: FromStr>(&self, row: usize, col: usize, name: &'static str) -> Result<T, DataError> {
        self.get(row, Some(col), name)?.ok_or_else(|| DataError::BadValue {
            file: self.file.clone(),
            row: row + 1,
            column: name,
            value: String::new(),
        })
    }
}

pub fn read_network(nodes: &Path, edges: &Path) -> Result<Network, DataError> {
    let nt = Table::open(nodes)?;
    let id = nt.require("node_id")?;
    let (x, y) = (nt.column("x"), nt.column("y"));
    let mut node_rows = Vec::with_capacity(nt.rows.len());
    for i in 0..nt.rows.len() {
        node_rows.push(NodeRecord {
            id: NodeId(nt.need(i, id, "node_id")?),
            x: nt.get(i, x, "x")?,
            y: nt.get(i, y, "y")?,
        });
    }
    let et = Table::open(edges)?;
    let (from, to, time) = (et.require("from")?, et.require("to")?, et.require("travel_time_s")?);
    let length = et.column("length_m");
    let mut arcs = Vec::with_capacity(et.rows.len());
    for i in 0..et.rows.len() {
        arcs.push(ArcRecord {
            from: NodeId(et.need(i, from, "from")?),
            to: NodeId(et.need(i, to, "to")?),
            travel_time: et.need(i, time, "travel_time_s")?,
            length: et.get(i, length, "length_m")?,
        });
    }
    Network::load(&node_rows, &arcs).map_err(|source| DataError::Network { file: et.file.clone(), source })
}

pub fn write_network(net: &Network, nodes: &Path, edges: &Path) -> Result<(), DataError> {
    let mut w = csv_writer(nodes)?;
    let err = |source| DataError::Csv { file: nodes.display().to_string(), source };
    w.write_record(["node_id", "x", "y"]).map_err(err)?;
    for &n in net.node_ids() {
        let (x, y) = net
            .coordinates(n)
            .map_or((String::new(), String::new()), |(x, y)| (x.to_string(), y.to_string()));
        w.write_record([n.to_string(), x, y]).map_err(err)?;
    }
    w.flush().map_err(|e| err(e.into()))?;
    let mut w = csv_writer(edges)?;
    let err = |source| DataError::Csv { file: edges.display().to_string(), source };
    w.write_record(["from", "to", "travel_time_s", "length_m"]).map_err(err)?;
    for &a in net.node_ids() {
        for &b in net.node_ids() {
            if let Some((t, l)) = net.arc(a, b) {
                w.write_record([a.to_string(), b.to_string(), t.to_string(), l.to_string()])
                    .map_err(err)?;
            }
        }
    }
    w.flush().map_err(|e| err(e.into()))
}

/// Reads requests, filling missing QoS columns with the given defaults and
/// validating every row against the network.
pub fn read_requests(path: &Path, net: &Network, max_wait: f64, max_detour: f64) -> Result<Vec<Request>, DataError> {
    let t = Table::open(path)?;
    parse_requests(&t, net, max_wait, max_detour)
}

fn parse_requests(t: &Table, net: &Network, max_wait: f64, max_detour: f64) -> Result<Vec<Request>, DataError> {
    let id = t.require("request_id")?;
    let o = t.require("origin_node")?;
    let d = t.require("dest_node")?;
    let e = t.require("emergence_time_s")?;
    let (w, x) = (t.column("max_wait_s"), t.column("max_detour_s"));
    let mut out: Vec<Request> = Vec::with_capacity(t.rows.len());
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..t.rows.len() {
        let r = Request {
            id: RequestId(t.need(i, id, "request_id")?),
            origin: NodeId(t.need(i, o, "origin_node")?),
            destination: NodeId(t.need(i, d, "dest_node")?),
            emergence: t.need(i, e, "emergence_time_s")?,
            max_wait: t.get(i, w, "max_wait_s")?.unwrap_or(max_wait),
            max_detour: t.get(i, x, "max_detour_s")?.unwrap_or(max_detour),
        };
        let invalid = |message: String| DataError::Invalid { file: t.file.clone(), row: i + 1, message };
        r.validate().map_err(|e| invalid(e.to_string()))?;
        for n in [r.origin, r.destination] {
            if !net.contains(n) {
                return Err(invalid(format!("unknown node {n}")));
            }
        }
        if !seen.insert(r.id) {
            return Err(invalid(format!("duplicate request {}", r.id)));
        }
        if net.shortest_time(r.origin, r.destination).map_or(true, |x| !x.is_finite()) {
            return Err(invalid(format!("destination of request {} unreachable", r.id)));
        }
        out.push(r);
    }
    out.sort_by(|a, b| a.emergence.total_cmp(&b.emergence).then(a.id.cmp(&b.id)));
    Ok(out)
}

pub fn write_requests(path: &Path, requests: &[Request]) -> Result<(), DataError> {
    let mut w = csv_writer(path)?;
    let err = |source| DataError::Csv { file: path.display().to_string(), source };
    w.write_record(["request_id", "origin_node", "dest_node", "emergence_time_s", "max_wait_s", "max_detour_s"])
        .map_err(err)?;
    for r in requests {
        w.write_record([
            r.id.to_string(),
            r.origin.to_string(),
            r.destination.to_string(),
            format!("{:.6}", r.emergence),
            format!("{:.6}", r.max_wait),
            format!("{:.6}", r.max_detour),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| err(e.into()))
}

pub fn read_vehicles(path: &Path, net: &Network, capacity: u32) -> Result<Vec<VehicleState>, DataError> {
    let t = Table::open(path)?;
    let id = t.require("vehicle_id")?;
    let node = t.require("start_node")?;
    let cap = t.column("capacity");
    let mut out: Vec<VehicleState> = Vec::with_capacity(t.rows.len());
    for i in 0..t.rows.len() {
        let v = VehicleId(t.need(i, id, "vehicle_id")?);
        let n = NodeId(t.need(i, node, "start_node")?);
        let c: u32 = t.get(i, cap, "capacity")?.unwrap_or(capacity);
        let invalid = |message: String| DataError::Invalid { file: t.file.clone(), row: i + 1, message };
        if !net.contains(n) {
            return Err(invalid(format!("unknown node {n}")));
        }
        if c == 0 {
            return Err(invalid("capacity must be positive".into()));
        }
        if out.iter().any(|x| x.id == v) {
            return Err(invalid(format!("duplicate vehicle {v}")));
        }
        out.push(VehicleState::new(v, n, c));
    }
    out.sort_by_key(|v| v.id);
    Ok(out)
}

pub fn write_vehicles(path: &Path, vehicles: &[VehicleState]) -> Result<(), DataError> {
    let mut w = csv_writer(path)?;
    let err = |source| DataError::Csv { file: path.display().to_string(), source };
    w.write_record(["vehicle_id", "start_node", "capacity"]).map_err(err)?;
    for v in vehicles {
        w.write_record([v.id.to_string(), v.node.to_string(), v.capacity.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| err(e.into()))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>, DataError> {
    let f = File::create(path).map_err(|source| DataError::Open { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(f))
}

/// Writes `text` to `path`, mapping errors like the readers do.
pub fn write_text(path: &Path, text: &str) -> Result<(), DataError> {
    File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|source| DataError::Open { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> Network {
        Network::grid(2, 2, 100.0, 10.0)
    }

    fn table(text: &str) -> Table {
        Table::read("requests.csv", text.as_bytes()).unwrap()
    }

    #[test]
    fn requests_default_qos() {
        let t = table("request_id,origin_node,dest_node,emergence_time_s\n2,0,3,5\n1,1,2,5\n");
        let rs = parse_requests(&t, &net(), 300.0, 600.0).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[0].id, RequestId(1));
        assert_eq!(rs[0].max_wait, 300.0);
        assert_eq!(rs[1].max_detour, 600.0);
    }

    #[test]
    fn request_row_errors() {
        let t = table("request_id,origin_node,dest_node,emergence_time_s\n1,0,0,5\n");
        let e = parse_requests(&t, &net(), 300.0, 600.0).unwrap_err();
        assert!(e.to_string().contains("row 1"), "{e}");
        let t = table("request_id,origin_node,dest_node,emergence_time_s\n1,0,9,5\n");
        assert!(parse_requests(&t, &net(), 300.0, 600.0).is_err());
        let t = table("request_id,origin_node,dest_node,emergence_time_s\n1,0,x,5\n");
        let e = parse_requests(&t, &net(), 300.0, 600.0).unwrap_err();
        assert!(e.to_string().contains("dest_node"), "{e}");
        let t = table("request_id,origin_node,emergence_time_s\n1,0,5\n");
        assert!(matches!(
            parse_requests(&t, &net(), 300.0, 600.0),
            Err(DataError::MissingColumn { column: "dest_node", .. })
        ));
    }

    #[test]
    fn round_trip_files() {
        let dir = tempfile::tempdir().unwrap();
        let n = net();
        let (np, ep) = (dir.path().join("nodes.csv"), dir.path().join("edges.csv"));
        write_network(&n, &np, &ep).unwrap();
        let back = read_network(&np, &ep).unwrap();
        assert_eq!(back.node_count(), 4);
        assert_eq!(back.arc_count(), n.arc_count());
        assert_eq!(back.time(NodeId(0), NodeId(3)), 20.0);

        let vp = dir.path().join("vehicles.csv");
        let vs = vec![VehicleState::new(VehicleId(1), NodeId(2), 3)];
        write_vehicles(&vp, &vs).unwrap();
        let vb = read_vehicles(&vp, &n, 4).unwrap();
        assert_eq!(vb[0].capacity, 3);
        assert_eq!(vb[0].node, NodeId(2));
    }
}
