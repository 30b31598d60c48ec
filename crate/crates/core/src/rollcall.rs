//! Roll-call ingestion: vote tokens, the raw five-state matrix, the
//! binary view used by the likelihood, the pre-model row filter and
//! participation/attendance/abstention statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VoteState {
    Yes,
    No,
    Abstain,
    Absent,
    NotListed,
}

impl VoteState {
    pub const ALL: [VoteState; 5] = [
        VoteState::Yes,
        VoteState::No,
        VoteState::Abstain,
        VoteState::Absent,
        VoteState::NotListed,
    ];

    /// Binary model value: `Some(true)` for Yes, `Some(false)` for No,
    /// `None` for every state treated as missing.
    pub fn as_binary(self) -> Option<bool> {
        match self {
            VoteState::Yes => Some(true),
            VoteState::No => Some(false),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            VoteState::Yes => "yes",
            VoteState::No => "no",
            VoteState::Abstain => "abstain",
            VoteState::Absent => "absent",
            VoteState::NotListed => "not_listed",
        }
    }
}

impl FromStr for VoteState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "yes" => Ok(VoteState::Yes),
            "no" => Ok(VoteState::No),
            "abstain" => Ok(VoteState::Abstain),
            "absent" => Ok(VoteState::Absent),
            "not_listed" | "notlisted" => Ok(VoteState::NotListed),
            other => Err(format!("unknown vote state `{other}`")),
        }
    }
}

/// Maps raw cell strings to vote states. Lookup is case-insensitive and
/// ignores surrounding whitespace.
#[derive(Clone, Debug)]
pub struct TokenMap {
    map: HashMap<String, VoteState>,
}

impl Default for TokenMap {
    fn default() -> Self {
        let mut map = HashMap::new();
        for (token, state) in [
            ("SI", VoteState::Yes),
            ("SÍ", VoteState::Yes),
            ("NO", VoteState::No),
            ("ABSTENCION", VoteState::Abstain),
            ("ABSTENCIÓN", VoteState::Abstain),
            ("AUSENTE", VoteState::Absent),
            ("NO-LISTADO", VoteState::NotListed),
        ] {
            map.insert(token.to_string(), state);
        }
        Self { map }
    }
}

impl TokenMap {
    pub fn empty() -> Self {
        Self {
            map: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: &str, state: VoteState) {
        self.map.insert(normalize_token(token), state);
    }

    pub fn get(&self, token: &str) -> Option<VoteState> {
        self.map.get(&normalize_token(token)).copied()
    }

    /// Reads a `token,state` mapping file (header row required) and layers it
    /// over the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(file, &path.display().to_string())
    }

    pub fn from_reader<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut tokens = TokenMap::default();
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let line = row + 2;
            if record.len() != 2 {
                return Err(parse_error(source, line, 1, "expected `token,state`"));
            }
            let state = record[1]
                .parse::<VoteState>()
                .map_err(|msg| parse_error(source, line, 2, msg))?;
            tokens.insert(&record[0], state);
        }
        Ok(tokens)
    }
}

fn normalize_token(token: &str) -> String {
    token.trim().to_uppercase()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bloc {
    Coalition,
    Opposition,
    Independent,
    Minority,
}

impl Bloc {
    pub fn name(self) -> &'static str {
        match self {
            Bloc::Coalition => "Coalition",
            Bloc::Opposition => "Opposition",
            Bloc::Independent => "Independent",
            Bloc::Minority => "Minority",
        }
    }
}

impl fmt::Display for Bloc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Bloc {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_lowercase();
        match key.as_str() {
            "coalition" | "coalicion" | "coalición" => Ok(Bloc::Coalition),
            "opposition" | "oposicion" | "oposición" => Ok(Bloc::Opposition),
            "independent" | "independents" | "independiente" | "independientes" => {
                Ok(Bloc::Independent)
            }
            "minority" | "minorities" | "minoria" | "minoría" | "minorias" | "minorías" => {
                Ok(Bloc::Minority)
            }
            _ => Err(format!("unknown bloc `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LegislatorMeta {
    pub id: String,
    pub name: String,
    pub party: String,
    pub bloc: Bloc,
    pub attribute_flag: bool,
    pub anchor: Option<f64>,
}

/// Raw n x m grid of vote states, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VoteMatrix {
    legislator_ids: Vec<String>,
    list_ids: Vec<String>,
    cells: Vec<VoteState>,
}

impl VoteMatrix {
    pub fn new(
        legislator_ids: Vec<String>,
        list_ids: Vec<String>,
        cells: Vec<VoteState>,
    ) -> Result<Self> {
        if list_ids.is_empty() {
            return Err(Error::NoVoteLists);
        }
        if cells.len() != legislator_ids.len() * list_ids.len() {
            return Err(Error::Domain(format!(
                "expected {} cells for a {}x{} matrix, got {}",
                legislator_ids.len() * list_ids.len(),
                legislator_ids.len(),
                list_ids.len(),
                cells.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &legislator_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            legislator_ids,
            list_ids,
            cells,
        })
    }

    pub fn n(&self) -> usize {
        self.legislator_ids.len()
    }

    pub fn m(&self) -> usize {
        self.list_ids.len()
    }

    pub fn legislator_ids(&self) -> &[String] {
        &self.legislator_ids
    }

    pub fn list_ids(&self) -> &[String] {
        &self.list_ids
    }

    pub fn get(&self, i: usize, j: usize) -> VoteState {
        self.cells[i * self.m() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, state: VoteState) {
        let m = self.m();
        self.cells[i * m + j] = state;
    }

    pub fn row(&self, i: usize) -> &[VoteState] {
        let m = self.m();
        &self.cells[i * m..(i + 1) * m]
    }

    /// Keeps only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> VoteMatrix {
        let mut cells = Vec::with_capacity(rows.len() * self.m());
        for &i in rows {
            cells.extend_from_slice(self.row(i));
        }
        VoteMatrix {
            legislator_ids: rows.iter().map(|&i| self.legislator_ids[i].clone()).collect(),
            list_ids: self.list_ids.clone(),
            cells,
        }
    }

    /// Writes the matrix back out as a votes CSV using the first token the
    /// default map assigns to each state.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.list_ids.iter().cloned());
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut record = vec![self.legislator_ids[i].clone()];
            record.extend(self.row(i).iter().map(|s| default_token(*s).to_string()));
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn default_token(state: VoteState) -> &'static str {
    match state {
        VoteState::Yes => "SI",
        VoteState::No => "NO",
        VoteState::Abstain => "ABSTENCION",
        VoteState::Absent => "AUSENTE",
        VoteState::NotListed => "NO-LISTADO",
    }
}

#[derive(Clone, Debug)]
pub struct ParseOptions {
    pub tokens: TokenMap,
    /// Meta column holding the 0/1 attribute flag.
    pub attribute_column: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            tokens: TokenMap::default(),
            attribute_column: "attribute_flag".to_string(),
        }
    }
}

fn parse_error(file: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: file.to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Reads the votes and meta files. The returned roster is aligned with the
/// matrix rows; meta rows for ids absent from the vote file are ignored.
pub fn parse_rollcall(
    votes: &Path,
    meta: &Path,
    options: &ParseOptions,
) -> Result<(VoteMatrix, Vec<LegislatorMeta>)> {
    let votes_file = std::fs::File::open(votes).map_err(|e| Error::io(votes, e))?;
    let meta_file = std::fs::File::open(meta).map_err(|e| Error::io(meta, e))?;
    parse_rollcall_from_readers(
        votes_file,
        &votes.display().to_string(),
        meta_file,
        &meta.display().to_string(),
        options,
    )
}

pub fn parse_rollcall_from_readers<V: Read, M: Read>(
    votes: V,
    votes_name: &str,
    meta: M,
    meta_name: &str,
    options: &ParseOptions,
) -> Result<(VoteMatrix, Vec<LegislatorMeta>)> {
    let matrix = parse_votes(votes, votes_name, &options.tokens)?;
    let roster = parse_meta(meta, meta_name, &options.attribute_column)?;

    let by_id: HashMap<&str, &LegislatorMeta> =
        roster.iter().map(|l| (l.id.as_str(), l)).collect();
    let mut aligned = Vec::with_capacity(matrix.n());
    for id in matrix.legislator_ids() {
        match by_id.get(id.as_str()) {
            Some(meta) => aligned.push((*meta).clone()),
            None => return Err(Error::UnknownLegislator(id.clone())),
        }
    }
    Ok((matrix, aligned))
}

fn parse_votes<R: Read>(reader: R, source: &str, tokens: &TokenMap) -> Result<VoteMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::NoVoteLists);
    }
    let list_ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let m = list_ids.len();

    let mut ids = Vec::new();
    let mut seen = HashSet::new();
    let mut cells = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        if record.len() != m + 1 {
            return Err(parse_error(
                source,
                line,
                record.len().min(m + 1),
                format!("expected {} columns, found {}", m + 1, record.len()),
            ));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(parse_error(source, line, 1, "empty legislator id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        for (col, token) in record.iter().enumerate().skip(1) {
            let state = tokens.get(token).ok_or_else(|| {
                parse_error(source, line, col + 1, format!("unknown vote token `{token}`"))
            })?;
            cells.push(state);
        }
        ids.push(id);
    }
    VoteMatrix::new(ids, list_ids, cells)
}

fn parse_meta<R: Read>(reader: R, source: &str, attribute_column: &str) -> Result<Vec<LegislatorMeta>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| parse_error(source, 1, 1, format!("missing column `{name}`")))
    };
    let c_id = column("id")?;
    let c_name = column("name")?;
    let c_party = column("party")?;
    let c_bloc = column("bloc")?;
    let c_attr = column(attribute_column)?;
    let c_anchor = header.iter().position(|h| h.eq_ignore_ascii_case("anchor"));

    let mut roster = Vec::new();
    let mut seen = HashSet::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(row + 2);
        let id = record[c_id].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let bloc = record[c_bloc]
            .parse::<Bloc>()
            .map_err(|msg| parse_error(source, line, c_bloc + 1, msg))?;
        let attribute_flag = match record[c_attr].to_ascii_lowercase().as_str() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(parse_error(
                    source,
                    line,
                    c_attr + 1,
                    format!("attribute flag must be 0 or 1, found `{other}`"),
                ))
            }
        };
        let anchor = match c_anchor.map(|c| &record[c]) {
            None | Some("") => None,
            Some(text) => {
                let v: f64 = text.parse().map_err(|_| {
                    parse_error(source, line, c_anchor.unwrap() + 1, format!("invalid anchor `{text}`"))
                })?;
                if !v.is_finite() {
                    return Err(parse_error(source, line, c_anchor.unwrap() + 1, "anchor must be finite"));
                }
                Some(v)
            }
        };
        roster.push(LegislatorMeta {
            id,
            name: record[c_name].to_string(),
            party: record[c_party].to_string(),
            bloc,
            attribute_flag,
            anchor,
        });
    }
    validate_anchors(&roster)?;
    Ok(roster)
}

fn validate_anchors(roster: &[LegislatorMeta]) -> Result<()> {
    let pins: Vec<f64> = roster.iter().filter_map(|l| l.anchor).collect();
    if pins.len() > 2 {
        return Err(Error::Config(format!(
            "at most 2 legislators may carry an anchor, found {}",
            pins.len()
        )));
    }
    if pins.len() == 2 && pins[0] == pins[1] {
        return Err(Error::Config("the two anchor values must differ".into()));
    }
    Ok(())
}

/// Writes a meta CSV with the standard column set.
pub fn write_meta_csv<W: std::io::Write>(roster: &[LegislatorMeta], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "name", "party", "bloc", "attribute_flag", "anchor"])?;
    for l in roster {
        w.write_record([
            l.id.as_str(),
            l.name.as_str(),
            l.party.as_str(),
            l.bloc.name(),
            if l.attribute_flag { "1" } else { "0" },
            &l.anchor.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Yes/No/missing view of a vote matrix with row- and column-wise indexes
/// of the observed cells.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryView {
    n: usize,
    m: usize,
    cells: Vec<Option<bool>>,
    by_row: Vec<Vec<(usize, bool)>>,
    by_col: Vec<Vec<(usize, bool)>>,
    n_obs: usize,
}

impl BinaryView {
    pub fn from_cells(n: usize, m: usize, cells: Vec<Option<bool>>) -> Self {
        assert_eq!(cells.len(), n * m, "cell count must equal n * m");
        let mut by_row = vec![Vec::new(); n];
        let mut by_col = vec![Vec::new(); m];
        let mut n_obs = 0;
        for i in 0..n {
            for j in 0..m {
                if let Some(y) = cells[i * m + j] {
                    by_row[i].push((j, y));
                    by_col[j].push((i, y));
                    n_obs += 1;
                }
            }
        }
        Self {
            n,
            m,
            cells,
            by_row,
            by_col,
            n_obs,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn get(&self, i: usize, j: usize) -> Option<bool> {
        self.cells[i * self.m + j]
    }

    /// Observed cells of row `i` as `(column, vote)`.
    pub fn row(&self, i: usize) -> &[(usize, bool)] {
        &self.by_row[i]
    }

    /// Observed cells of column `j` as `(row, vote)`.
    pub fn col(&self, j: usize) -> &[(usize, bool)] {
        &self.by_col[j]
    }

    /// Observed cells in row-major order as `(row, column, vote)`.
    pub fn observed(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        self.by_row
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, y)| (i, j, y)))
    }

    /// CSV of the 0/1/NA matrix with the given identifiers.
    pub fn write_csv<W: std::io::Write>(
        &self,
        legislator_ids: &[String],
        list_ids: &[String],
        writer: W,
    ) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(list_ids.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in legislator_ids.iter().enumerate().take(self.n) {
            let mut record = vec![id.clone()];
            for j in 0..self.m {
                record.push(
                    match self.get(i, j) {
                        Some(true) => "1",
                        Some(false) => "0",
                        None => "NA",
                    }
                    .to_string(),
                );
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn encode_for_model(matrix: &VoteMatrix) -> BinaryView {
    let cells = (0..matrix.n())
        .flat_map(|i| matrix.row(i).iter().map(|s| s.as_binary()))
        .collect();
    BinaryView::from_cells(matrix.n(), matrix.m(), cells)
}

#[derive(Clone, Debug)]
pub struct Filtered {
    pub matrix: VoteMatrix,
    pub roster: Vec<LegislatorMeta>,
    pub dropped: Vec<String>,
}

/// Drops legislators without a single Yes/No vote.
pub fn filter_for_model(matrix: &VoteMatrix, roster: &[LegislatorMeta]) -> Result<Filtered> {
    assert_eq!(matrix.n(), roster.len(), "roster must align with matrix rows");
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    for i in 0..matrix.n() {
        if matrix.row(i).iter().any(|s| s.as_binary().is_some()) {
            keep.push(i);
        } else {
            dropped.push(matrix.legislator_ids()[i].clone());
        }
    }
    if keep.len() < 3 {
        return Err(Error::ModelInfeasible {
            retained: keep.len(),
        });
    }
    Ok(Filtered {
        matrix: matrix.select_rows(&keep),
        roster: keep.iter().map(|&i| roster[i].clone()).collect(),
        dropped,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LegislatorStats {
    pub id: String,
    pub party: String,
    pub bloc: Bloc,
    pub attribute_flag: bool,
    pub counts: StateCounts,
    /// Share of vote lists on which the legislator was listed.
    pub participation_pct: f64,
    /// Share of listed votes with a recorded Yes/No/Abstain; `None` when never listed.
    pub attendance_pct: Option<f64>,
    /// Share of Yes/No/Abstain that were abstentions; `None` when that count is 0.
    pub abstention_pct: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StateCounts {
    pub yes: usize,
    pub no: usize,
    pub abstain: usize,
    pub absent: usize,
    pub not_listed: usize,
}

impl StateCounts {
    pub fn tally(states: &[VoteState]) -> Self {
        let mut c = StateCounts::default();
        for s in states {
            match s {
                VoteState::Yes => c.yes += 1,
                VoteState::No => c.no += 1,
                VoteState::Abstain => c.abstain += 1,
                VoteState::Absent => c.absent += 1,
                VoteState::NotListed => c.not_listed += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.yes + self.no + self.abstain + self.absent + self.not_listed
    }

    pub fn listed(&self) -> usize {
        self.total() - self.not_listed
    }

    pub fn present(&self) -> usize {
        self.yes + self.no + self.abstain
    }
}

/// Five-number summary over the defined values of one metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spread {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let s = stats::sorted(values);
        Some(Self {
            count: s.len(),
            min: s[0],
            q1: stats::quantile_sorted(&s, 0.25),
            median: stats::quantile_sorted(&s, 0.5),
            q3: stats::quantile_sorted(&s, 0.75),
            max: s[s.len() - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupStats {
    pub group: String,
    pub members: usize,
    pub participation: Option<Spread>,
    pub attendance: Option<Spread>,
    pub abstention: Option<Spread>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescriptiveStats {
    pub legislators: Vec<LegislatorStats>,
    pub overall: GroupStats,
    pub by_party: Vec<GroupStats>,
    pub by_bloc: Vec<GroupStats>,
    pub by_attribute: Vec<GroupStats>,
}

pub fn legislator_stats(states: &[VoteState]) -> (StateCounts, f64, Option<f64>, Option<f64>) {
    let counts = StateCounts::tally(states);
    let m = states.len();
    let participation = if m == 0 {
        0.0
    } else {
        100.0 * counts.listed() as f64 / m as f64
    };
    let attendance = (counts.listed() > 0)
        .then(|| 100.0 * counts.present() as f64 / counts.listed() as f64);
    let abstention = (counts.present() > 0)
        .then(|| 100.0 * counts.abstain as f64 / counts.present() as f64);
    (counts, participation, attendance, abstention)
}

pub fn descriptive_stats(matrix: &VoteMatrix, roster: &[LegislatorMeta]) -> DescriptiveStats {
    assert_eq!(matrix.n(), roster.len(), "roster must align with matrix rows");
    let legislators: Vec<LegislatorStats> = (0..matrix.n())
        .map(|i| {
            let (counts, participation_pct, attendance_pct, abstention_pct) =
                legislator_stats(matrix.row(i));
            LegislatorStats {
                id: roster[i].id.clone(),
                party: roster[i].party.clone(),
                bloc: roster[i].bloc,
                attribute_flag: roster[i].attribute_flag,
                counts,
                participation_pct,
                attendance_pct,
                abstention_pct,
            }
        })
        .collect();

    let group = |label: String, members: &[&LegislatorStats]| -> GroupStats {
        let part: Vec<f64> = members.iter().map(|l| l.participation_pct).collect();
        let att: Vec<f64> = members.iter().filter_map(|l| l.attendance_pct).collect();
        let abs: Vec<f64> = members.iter().filter_map(|l| l.abstention_pct).collect();
        GroupStats {
            group: label,
            members: members.len(),
            participation: Spread::of(&part),
            attendance: Spread::of(&att),
            abstention: Spread::of(&abs),
        }
    };

    let grouped = |key: &dyn Fn(&LegislatorStats) -> String| -> Vec<GroupStats> {
        let mut groups: BTreeMap<String, Vec<&LegislatorStats>> = BTreeMap::new();
        for l in &legislators {
            groups.entry(key(l)).or_default().push(l);
        }
        groups.into_iter().map(|(k, v)| group(k, &v)).collect()
    };

    let all: Vec<&LegislatorStats> = legislators.iter().collect();
    DescriptiveStats {
        overall: group("all".to_string(), &all),
        by_party: grouped(&|l| l.party.clone()),
        by_bloc: grouped(&|l| l.bloc.name().to_string()),
        by_attribute: grouped(&|l| if l.attribute_flag { "1" } else { "0" }.to_string()),
        legislators,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use VoteState::*;

    const META: &str = "id,name,party,bloc,attribute_flag,anchor\n\
        a,Ana,P1,Coalition,0,-1\n\
        b,Beto,P2,Opposition,1,1\n\
        c,Caro,P1,Coalition,0,\n";

    fn parse(votes: &str, meta: &str) -> Result<(VoteMatrix, Vec<LegislatorMeta>)> {
        parse_rollcall_from_readers(
            votes.as_bytes(),
            "votes.csv",
            meta.as_bytes(),
            "meta.csv",
            &ParseOptions::default(),
        )
    }

    #[test]
    fn parses_tokens_into_states() {
        let votes = "id,v1,v2,v3\na,SI,NO,AUSENTE\nb,si,ABSTENCION,NO-LISTADO\nc,NO,NO,SI\n";
        let (m, roster) = parse(votes, META).unwrap();
        assert_eq!((m.n(), m.m()), (3, 3));
        assert_eq!(m.row(0), &[Yes, No, Absent]);
        assert_eq!(m.row(1), &[Yes, Abstain, NotListed]);
        assert_eq!(roster[0].anchor, Some(-1.0));
        assert_eq!(roster[2].anchor, None);
        assert_eq!(roster[1].bloc, Bloc::Opposition);
        assert!(roster[1].attribute_flag);
    }

    #[test]
    fn roster_follows_vote_file_order() {
        let votes = "id,v1\nc,SI\na,NO\nb,SI\n";
        let (m, roster) = parse(votes, META).unwrap();
        assert_eq!(m.legislator_ids(), &["c", "a", "b"]);
        let ids: Vec<&str> = roster.iter().map(|l| l.id.as_str()).collect();
        assert_eq!(ids, ["c", "a", "b"]);
    }

    #[test]
    fn empty_vote_file_has_no_lists() {
        assert!(matches!(parse("id\na\n", META), Err(Error::NoVoteLists)));
        assert!(matches!(parse("", META), Err(Error::NoVoteLists)));
    }

    #[test]
    fn unknown_token_reports_location() {
        let err = parse("id,v1,v2\na,SI,MAYBE\n", META).unwrap_err();
        match err {
            Error::Parse { line, column, message, .. } => {
                assert_eq!((line, column), (2, 3));
                assert!(message.contains("MAYBE"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_unknown_ids_are_rejected() {
        assert!(matches!(parse("id,v1\na,SI\na,NO\n", META), Err(Error::DuplicateId(id)) if id == "a"));
        assert!(matches!(parse("id,v1\nz,SI\n", META), Err(Error::UnknownLegislator(id)) if id == "z"));
        let dup_meta = format!("{META}a,Ana2,P1,Coalition,0,\n");
        assert!(matches!(parse("id,v1\na,SI\n", &dup_meta), Err(Error::DuplicateId(_))));
    }

    #[test]
    fn ragged_row_is_a_dimension_error() {
        let err = parse("id,v1,v2\na,SI\n", META).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn anchor_rules() {
        let three = "id,name,party,bloc,attribute_flag,anchor\n\
            a,A,P,Coalition,0,-1\nb,B,P,Coalition,0,1\nc,C,P,Coalition,0,2\n";
        assert!(matches!(parse("id,v1\na,SI\n", three), Err(Error::Config(_))));
        let same = "id,name,party,bloc,attribute_flag,anchor\n\
            a,A,P,Coalition,0,1\nb,B,P,Coalition,0,1\n";
        assert!(matches!(parse("id,v1\na,SI\n", same), Err(Error::Config(_))));
    }

    #[test]
    fn custom_token_map_layers_over_defaults() {
        let tokens = TokenMap::from_reader("token,state\nY,yes\nN,no\n".as_bytes(), "map").unwrap();
        assert_eq!(tokens.get("y"), Some(Yes));
        assert_eq!(tokens.get("N"), Some(No));
        assert_eq!(tokens.get("SI"), Some(Yes));
        assert!(TokenMap::from_reader("token,state\nY,perhaps\n".as_bytes(), "map").is_err());
    }

    #[test]
    fn encoding_maps_states_and_counts_observed() {
        let m = VoteMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["v1".into(), "v2".into()],
            vec![Yes, No, Absent, Yes],
        )
        .unwrap();
        let view = encode_for_model(&m);
        assert_eq!(view.n_obs(), 3);
        assert_eq!(view.get(0, 0), Some(true));
        assert_eq!(view.get(0, 1), Some(false));
        assert_eq!(view.get(1, 0), None);
        assert_eq!(view.col(1), &[(0, false), (1, true)]);
        let cells: Vec<_> = view.observed().collect();
        assert_eq!(cells, vec![(0, 0, true), (0, 1, false), (1, 1, true)]);

        let abstain = VoteMatrix::new(vec!["a".into()], vec!["v".into()], vec![Abstain]).unwrap();
        assert_eq!(encode_for_model(&abstain).get(0, 0), None);
    }

    #[test]
    fn all_missing_matrix_has_no_observations() {
        let m = VoteMatrix::new(
            vec!["a".into(), "b".into()],
            vec!["v1".into(), "v2".into()],
            vec![Abstain, Absent, NotListed, Absent],
        )
        .unwrap();
        assert_eq!(encode_for_model(&m).n_obs(), 0);
    }

    fn roster(ids: &[&str]) -> Vec<LegislatorMeta> {
        ids.iter()
            .map(|id| LegislatorMeta {
                id: id.to_string(),
                name: id.to_string(),
                party: "P".into(),
                bloc: Bloc::Coalition,
                attribute_flag: false,
                anchor: None,
            })
            .collect()
    }

    #[test]
    fn filter_drops_rows_without_yes_or_no() {
        let ids = ["a", "b", "c", "d", "e"];
        let m = VoteMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            vec!["v1".into(), "v2".into()],
            vec![Yes, No, Absent, Abstain, No, Absent, NotListed, NotListed, Yes, Yes],
        )
        .unwrap();
        let f = filter_for_model(&m, &roster(&ids)).unwrap();
        assert_eq!(f.dropped, vec!["b", "d"]);
        assert_eq!(f.matrix.legislator_ids(), &["a", "c", "e"]);
        assert_eq!(f.roster.len(), 3);

        let full = VoteMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["v".into()],
            vec![Yes, No, Yes],
        )
        .unwrap();
        let same = filter_for_model(&full, &roster(&["a", "b", "c"])).unwrap();
        assert!(same.dropped.is_empty());
        assert_eq!(same.matrix, full);
    }

    #[test]
    fn filter_rejects_infeasible_models() {
        let m = VoteMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec!["v".into()],
            vec![Absent, Abstain, NotListed],
        )
        .unwrap();
        assert!(matches!(
            filter_for_model(&m, &roster(&["a", "b", "c"])),
            Err(Error::ModelInfeasible { retained: 0 })
        ));
    }

    #[test]
    fn percentages_follow_definitions() {
        let (_, p, a, ab) = legislator_stats(&[Yes, Abstain, Absent, NotListed]);
        assert_relative_eq!(p, 75.0);
        assert_relative_eq!(a.unwrap(), 200.0 / 3.0);
        // one abstention among two cells present
        assert_relative_eq!(ab.unwrap(), 50.0);

        let (_, p, a, ab) = legislator_stats(&[Yes; 10]);
        assert_eq!((p, a, ab), (100.0, Some(100.0), Some(0.0)));

        let mut one_list = vec![NotListed; 136];
        one_list[17] = Yes;
        let (_, p, _, _) = legislator_stats(&one_list);
        assert_relative_eq!(p, 0.74, epsilon = 0.005);

        let (_, p, a, ab) = legislator_stats(&[NotListed, NotListed]);
        assert_eq!((p, a, ab), (0.0, None, None));
        let (_, _, a, ab) = legislator_stats(&[Absent, NotListed]);
        assert_eq!((a, ab), (Some(0.0), None));
    }

    #[test]
    fn group_aggregates() {
        let ids = ["a", "b", "c"];
        let mut r = roster(&ids);
        r[1].party = "Q".into();
        r[1].bloc = Bloc::Opposition;
        r[2].attribute_flag = true;
        let m = VoteMatrix::new(
            ids.iter().map(|s| s.to_string()).collect(),
            vec!["v1".into(), "v2".into()],
            vec![Yes, Yes, Yes, NotListed, Abstain, No],
        )
        .unwrap();
        let s = descriptive_stats(&m, &r);
        assert_eq!(s.overall.members, 3);
        let p = s.by_party.iter().find(|g| g.group == "P").unwrap();
        assert_eq!(p.members, 2);
        assert_eq!(p.abstention.unwrap().max, 50.0);
        assert_eq!(p.abstention.unwrap().min, 0.0);
        assert_eq!(s.by_bloc.len(), 2);
        assert_eq!(s.by_attribute.len(), 2);
        let q = s.by_party.iter().find(|g| g.group == "Q").unwrap();
        assert_eq!(q.participation.unwrap().median, 50.0);
    }
}
