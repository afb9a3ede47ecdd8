//! Stage-by-stage execution of a plan on real data, with persistence.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::json;
use crate::plan::{decide, Decision, Plan};

pub const SESSION_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Status {
    /// `next_n` more samples complete the pending stage.
    NeedMore { next_n: u64 },
    /// Stages are 1-based.
    Accepted { stage: usize },
    Rejected { stage: usize },
}

impl Status {
    pub fn is_terminal(&self) -> bool {
        !matches!(self, Status::NeedMore { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub stage: usize,
    pub n: u64,
    pub statistic: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSession {
    pub plan: Plan,
    pub samples: Vec<f64>,
    /// 0-based index of the pending (or deciding) stage.
    pub current_stage: usize,
    pub status: Status,
    pub history: Vec<HistoryEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionFile {
    version: u32,
    #[serde(flatten)]
    session: TestSession,
}

impl TestSession {
    /// Starts a session. Uncertified plans are refused unless
    /// `allow_uncertified` is set.
    pub fn new(plan: Plan, allow_uncertified: bool) -> Result<TestSession> {
        if !plan.certified() && !allow_uncertified {
            return Err(Error::Plan(
                "plan is not certified; pass the override to run it anyway".into(),
            ));
        }
        let first = plan.stages().first().map(|s| s.n).ok_or_else(|| {
            Error::Plan("plan has no stages".into())
        })?;
        Ok(TestSession {
            plan,
            samples: Vec::new(),
            current_stage: 0,
            status: Status::NeedMore { next_n: first },
            history: Vec::new(),
        })
    }

    /// Samples that entered a decision.
    pub fn consumed(&self) -> u64 {
        self.history.last().map_or(0, |h| h.n)
    }

    /// Samples received after the decision was reached.
    pub fn unused(&self) -> &[f64] {
        if self.status.is_terminal() {
            &self.samples[self.consumed() as usize..]
        } else {
            &[]
        }
    }

    /// Appends `batch` and decides every stage it completes. On error the
    /// session is left unchanged.
    pub fn feed(&mut self, batch: &[f64]) -> Result<Status> {
        if self.status.is_terminal() {
            return Err(Error::State(format!(
                "session already terminated ({:?})",
                self.status
            )));
        }
        if let Some(x) = batch.iter().find(|x| !x.is_finite()) {
            return domain(format!("non-finite sample {x}"));
        }
        let mut next = self.clone();
        next.samples.extend_from_slice(batch);
        next.advance()?;
        *self = next;
        Ok(self.status)
    }

    fn advance(&mut self) -> Result<()> {
        let stages = self.plan.stages();
        let last = stages.len() - 1;
        while let Status::NeedMore { .. } = self.status {
            let st = stages[self.current_stage];
            if (self.samples.len() as u64) < st.n {
                self.status = Status::NeedMore {
                    next_n: st.n - self.samples.len() as u64,
                };
                break;
            }
            let t = self.plan.statistic(&self.samples, st.n)?;
            let d = decide(t, &st, self.current_stage == last)?;
            let stage = self.current_stage + 1;
            self.history.push(HistoryEntry {
                stage,
                n: st.n,
                statistic: t,
                decision: d,
            });
            match d {
                Decision::Accept => self.status = Status::Accepted { stage },
                Decision::Reject => self.status = Status::Rejected { stage },
                Decision::Continue => self.current_stage += 1,
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_string(&SessionFile {
            version: SESSION_VERSION,
            session: self.clone(),
        })
    }

    /// Parses a session and replays its samples; the stored history, stage
    /// and status must match the replay exactly.
    pub fn from_json(text: &str) -> Result<TestSession> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        match raw.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == SESSION_VERSION as u64 => {}
            Some(v) => return Err(Error::Schema(format!("unsupported session version {v}"))),
            None => return Err(Error::Schema("session version missing".into())),
        }
        let file: SessionFile = serde_json::from_value(raw)?;
        let stored = file.session;
        let mut replay = TestSession::new(stored.plan.clone(), true)?;
        replay.samples = stored.samples.clone();
        replay
            .advance()
            .map_err(|e| Error::Integrity(format!("replaying stored samples failed: {e}")))?;
        for (i, (a, b)) in stored.history.iter().zip(&replay.history).enumerate() {
            if a.statistic.to_bits() != b.statistic.to_bits() {
                return Err(Error::Integrity(format!(
                    "history entry {} statistic {} does not recompute ({})",
                    i + 1,
                    a.statistic,
                    b.statistic
                )));
            }
            if a != b {
                return Err(Error::Integrity(format!("history entry {} differs on replay", i + 1)));
            }
        }
        if stored.history.len() != replay.history.len()
            || stored.status != replay.status
            || stored.current_stage != replay.current_stage
        {
            return Err(Error::Integrity(
                "stored status does not follow from the stored samples".into(),
            ));
        }
        Ok(replay.with_certified(stored.plan.certified()))
    }

    fn with_certified(mut self, c: bool) -> Self {
        self.plan.set_certified(c);
        self
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_json()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TestSession> {
        TestSession::from_json(&fs::read_to_string(path)?)
    }
}

/// Plan JSON in the shared schema.
pub fn plan_to_json(plan: &Plan) -> Result<String> {
    json::to_string(plan)
}

/// Parses a bare plan record, or a document whose `plan` field holds one
/// (as written by the `design` command).
pub fn plan_from_json(text: &str) -> Result<Plan> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    if let Some(inner) = v.get_mut("plan") {
        let inner = inner.take();
        return Ok(serde_json::from_value(inner)?);
    }
    Ok(serde_json::from_value(v)?)
}

/// Alias for [`TestSession::new`].
pub fn new_session(plan: Plan, allow_uncertified: bool) -> Result<TestSession> {
    TestSession::new(plan, allow_uncertified)
}
