//! Five-phase lifecycle per project with evidence-backed closure gates.
//!
//! A project moves Strategy → Design → Transition → Operation → CSI. A phase
//! can only be left once its gate holds every required evidence kind and has
//! been closed by an actor. There is no regression.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::common::{ActorId, Counter, DocRef, ProjectId, Timestamp};
use crate::error::{require_text, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    Strategy,
    Design,
    Transition,
    Operation,
    #[serde(rename = "CSI")]
    Csi,
}

impl Phase {
    pub const ALL: [Phase; 5] = [
        Phase::Strategy,
        Phase::Design,
        Phase::Transition,
        Phase::Operation,
        Phase::Csi,
    ];

    pub fn successor(self) -> Option<Phase> {
        match self {
            Phase::Strategy => Some(Phase::Design),
            Phase::Design => Some(Phase::Transition),
            Phase::Transition => Some(Phase::Operation),
            Phase::Operation => Some(Phase::Csi),
            Phase::Csi => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Strategy => "Strategy",
            Phase::Design => "Design",
            Phase::Transition => "Transition",
            Phase::Operation => "Operation",
            Phase::Csi => "CSI",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Phase::ALL
            .into_iter()
            .find(|p| p.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::validation("phase", format!("unknown phase {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvidenceKind {
    RequirementDoc,
    ManagementApproval,
    ProcurementClosure,
    DesignDoc,
    LoadPlan,
    PortMap,
    ChangeLog,
    TestRunReport,
    SupportHandbook,
    AnnualReport,
}

impl EvidenceKind {
    pub const ALL: [EvidenceKind; 10] = [
        EvidenceKind::RequirementDoc,
        EvidenceKind::ManagementApproval,
        EvidenceKind::ProcurementClosure,
        EvidenceKind::DesignDoc,
        EvidenceKind::LoadPlan,
        EvidenceKind::PortMap,
        EvidenceKind::ChangeLog,
        EvidenceKind::TestRunReport,
        EvidenceKind::SupportHandbook,
        EvidenceKind::AnnualReport,
    ];
}

impl fmt::Display for EvidenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for EvidenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EvidenceKind::ALL
            .into_iter()
            .find(|k| k.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::validation("kind", format!("unknown evidence kind {s:?}")))
    }
}

/// Required evidence per phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GateChecklist(pub BTreeMap<Phase, BTreeSet<EvidenceKind>>);

impl Default for GateChecklist {
    fn default() -> Self {
        use EvidenceKind::*;
        let mut map = BTreeMap::new();
        map.insert(
            Phase::Strategy,
            [RequirementDoc, ManagementApproval, ProcurementClosure].into(),
        );
        map.insert(
            Phase::Design,
            [DesignDoc, LoadPlan, PortMap, ManagementApproval].into(),
        );
        map.insert(Phase::Transition, [ChangeLog, TestRunReport].into());
        map.insert(Phase::Operation, [SupportHandbook].into());
        map.insert(Phase::Csi, [AnnualReport].into());
        GateChecklist(map)
    }
}

impl GateChecklist {
    pub fn required(&self, phase: Phase) -> BTreeSet<EvidenceKind> {
        self.0.get(&phase).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub kind: EvidenceKind,
    pub doc_ref: DocRef,
    pub recorded_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseGate {
    pub phase: Phase,
    pub required_evidence: BTreeSet<EvidenceKind>,
    pub collected: Vec<Evidence>,
    pub closed: bool,
    pub closed_by: Option<ActorId>,
    pub closed_at: Option<Timestamp>,
}

impl PhaseGate {
    fn open(phase: Phase, required_evidence: BTreeSet<EvidenceKind>) -> Self {
        Self {
            phase,
            required_evidence,
            collected: Vec::new(),
            closed: false,
            closed_by: None,
            closed_at: None,
        }
    }

    pub fn collected_kinds(&self) -> BTreeSet<EvidenceKind> {
        self.collected.iter().map(|e| e.kind).collect()
    }

    /// Required kinds not yet present, in checklist order.
    pub fn missing(&self) -> Vec<EvidenceKind> {
        let have = self.collected_kinds();
        self.required_evidence
            .iter()
            .filter(|k| !have.contains(k))
            .copied()
            .collect()
    }

    pub fn has(&self, kind: EvidenceKind, doc_ref: &DocRef) -> bool {
        self.collected
            .iter()
            .any(|e| e.kind == kind && &e.doc_ref == doc_ref)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: ProjectId,
    pub name: String,
    pub organization: String,
    pub current_phase: Phase,
    pub gates: BTreeMap<Phase, PhaseGate>,
    pub created_at: Timestamp,
    /// Every phase the project has held, oldest first.
    pub phase_history: Vec<Phase>,
}

impl Project {
    pub fn gate(&self, phase: Phase) -> &PhaseGate {
        &self.gates[&phase]
    }

    pub fn current_gate(&self) -> &PhaseGate {
        self.gate(self.current_phase)
    }
}

/// Outcome of evidence submission; `added` is false for an idempotent repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvidenceReceipt {
    pub added: bool,
}

/// All projects and their gates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Lifecycle {
    checklist: GateChecklist,
    projects: BTreeMap<ProjectId, Project>,
    ids: Counter,
}

impl Default for Lifecycle {
    fn default() -> Self {
        Self::new(GateChecklist::default())
    }
}

impl Lifecycle {
    pub fn new(checklist: GateChecklist) -> Self {
        Self {
            checklist,
            projects: BTreeMap::new(),
            ids: Counter::new("prj", 6),
        }
    }

    pub fn checklist(&self) -> &GateChecklist {
        &self.checklist
    }

    pub fn get(&self, id: &ProjectId) -> Result<&Project> {
        self.projects
            .get(id)
            .ok_or_else(|| Error::not_found("project", id))
    }

    pub fn projects(&self) -> impl Iterator<Item = &Project> {
        self.projects.values()
    }

    fn get_mut(&mut self, id: &ProjectId) -> Result<&mut Project> {
        self.projects
            .get_mut(id)
            .ok_or_else(|| Error::not_found("project", id))
    }

    pub fn create_project(
        &mut self,
        name: &str,
        organization: &str,
        at: Timestamp,
    ) -> Result<&Project> {
        require_text("name", name)?;
        require_text("organization", organization)?;
        if self
            .projects
            .values()
            .any(|p| p.name == name && p.organization == organization)
        {
            return Err(Error::duplicate("project", format!("{organization}/{name}")));
        }
        let id = ProjectId::new(self.ids.next()?);
        let gates = Phase::ALL
            .into_iter()
            .map(|p| (p, PhaseGate::open(p, self.checklist.required(p))))
            .collect();
        let project = Project {
            id: id.clone(),
            name: name.to_string(),
            organization: organization.to_string(),
            current_phase: Phase::Strategy,
            gates,
            created_at: at,
            phase_history: vec![Phase::Strategy],
        };
        Ok(self.projects.entry(id).or_insert(project))
    }

    /// Checks that evidence for `phase` would be accepted right now.
    pub fn check_evidence(&self, id: &ProjectId, phase: Phase) -> Result<()> {
        let project = self.get(id)?;
        if phase != project.current_phase {
            return Err(Error::OutOfOrder {
                current: project.current_phase,
                requested: phase,
            });
        }
        if project.current_gate().closed {
            return Err(Error::immutable(
                "gate",
                format!("{id}/{phase}"),
                "gate already closed",
            ));
        }
        Ok(())
    }

    pub fn submit_evidence(
        &mut self,
        id: &ProjectId,
        phase: Phase,
        kind: EvidenceKind,
        doc_ref: DocRef,
        at: Timestamp,
    ) -> Result<EvidenceReceipt> {
        require_text("doc_ref", doc_ref.as_str())?;
        self.check_evidence(id, phase)?;
        let gate = self
            .get_mut(id)?
            .gates
            .get_mut(&phase)
            .expect("every phase has a gate");
        if gate.has(kind, &doc_ref) {
            return Ok(EvidenceReceipt { added: false });
        }
        gate.collected.push(Evidence {
            kind,
            doc_ref,
            recorded_at: at,
        });
        Ok(EvidenceReceipt { added: true })
    }

    pub fn close_gate(
        &mut self,
        id: &ProjectId,
        phase: Phase,
        actor: &ActorId,
        at: Timestamp,
    ) -> Result<&Project> {
        self.check_evidence(id, phase)?;
        let project = self.get_mut(id)?;
        let gate = project.gates.get_mut(&phase).expect("gate");
        let missing = gate.missing();
        if !missing.is_empty() {
            return Err(Error::GateIncomplete { phase, missing });
        }
        gate.closed = true;
        gate.closed_by = Some(actor.clone());
        gate.closed_at = Some(at);
        Ok(project)
    }

    pub fn advance_phase(&mut self, id: &ProjectId) -> Result<&Project> {
        let project = self.get_mut(id)?;
        let current = project.current_phase;
        let next = current.successor().ok_or(Error::TerminalPhase)?;
        if !project.gates[&current].closed {
            return Err(Error::PhaseBlocked { phase: current });
        }
        project.current_phase = next;
        project.phase_history.push(next);
        Ok(project)
    }
}
