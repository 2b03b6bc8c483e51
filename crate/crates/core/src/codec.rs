//! Compact 19-parameter plan message.
//!
//! Wire layout, 162 bytes, little-endian:
//!
//! | offset | size | content                                   |
//! |-------:|-----:|-------------------------------------------|
//! | 0      | 4    | magic `CLO1`                              |
//! | 4      | 1    | version `0x01`                            |
//! | 5      | 1    | case tag (0 = LL, 1 = GG, 2 = LG, 3 = GL) |
//! | 6      | 152  | 19 × f64, in [`FIELD_NAMES`] order        |
//! | 158    | 4    | CRC-32 of bytes 0..158                    |
//!
//! The outer sharpnesses `κ′0`, `κ′2` are not sent; the receiver recovers them
//! from curvature continuity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clothoid::Pose2D;
use crate::path::{curvature_at, sample_grid, PathError, ThreeClothoidPath};
use crate::plan::MotionPlan;
use crate::velocity::{SmoothedVelocityPlan, VelocityCase, VelocityError};

pub const MAGIC: [u8; 4] = *b"CLO1";
pub const VERSION: u8 = 1;
pub const MESSAGE_LEN: usize = 162;
const PAYLOAD_START: usize = 6;
const CRC_START: usize = MESSAGE_LEN - 4;

/// Transmission order of the 19 scalar fields.
pub const FIELD_NAMES: [&str; 19] = [
    "x0", "y0", "psi0", "s0", "s1", "s2", "kappa0", "kappa1", "kappa2", "kp1", "v0", "v_aux1", "v_aux2", "a0", "a1", "a2",
    "jc", "smooth_a", "smooth_b",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("length: expected {expected} bytes, got {got}")]
    Length { expected: usize, got: usize },
    #[error("magic: expected \"CLO1\", got {got:02x?}")]
    Magic { got: [u8; 4] },
    #[error("version: unsupported version {got}")]
    Version { got: u8 },
    #[error("checksum: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("case_tag: unknown tag {got}")]
    CaseTag { got: u8 },
    #[error("{field}: value {value} is not finite")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field}: {reason}")]
    Invariant { field: &'static str, reason: String },
    #[error("segment lengths differ between path {path:?} and speed plan {plan:?}")]
    InconsistentLengths { path: [f64; 3], plan: [f64; 3] },
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Velocity(#[from] VelocityError),
}

impl CodecError {
    /// Name of the offending field or record part.
    pub fn field(&self) -> &str {
        match self {
            CodecError::Length { .. } => "length",
            CodecError::Magic { .. } => "magic",
            CodecError::Version { .. } => "version",
            CodecError::Checksum { .. } => "checksum",
            CodecError::CaseTag { .. } => "case_tag",
            CodecError::NonFinite { field, .. } | CodecError::Invariant { field, .. } => field,
            CodecError::InconsistentLengths { .. } => "s0",
            CodecError::Path(_) => "path",
            CodecError::Velocity(_) => "velocity",
        }
    }
}

/// The 19 transmitted parameters and the speed-case tag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPlanMessage {
    pub x0: f64,
    pub y0: f64,
    pub psi0: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kp1: f64,
    pub v0: f64,
    pub v_aux1: f64,
    pub v_aux2: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub jc: f64,
    pub smooth_a: f64,
    pub smooth_b: f64,
    pub case_tag: VelocityCase,
}

impl MotionPlanMessage {
    pub fn from_plan(path: &ThreeClothoidPath, vplan: &SmoothedVelocityPlan) -> Result<Self, CodecError> {
        if path.lengths() != vplan.lengths() {
            return Err(CodecError::InconsistentLengths { path: path.lengths(), plan: vplan.lengths() });
        }
        let o = path.origin();
        let [k0, k1, k2] = path.curvatures();
        Ok(MotionPlanMessage {
            x0: o.x,
            y0: o.y,
            psi0: o.psi,
            s0: path.s0(),
            s1: path.s1(),
            s2: path.s2(),
            kappa0: k0,
            kappa1: k1,
            kappa2: k2,
            kp1: path.kp1(),
            v0: vplan.v0,
            v_aux1: vplan.v_aux1,
            v_aux2: vplan.v_aux2,
            a0: vplan.a0,
            a1: vplan.a1,
            a2: vplan.a2,
            jc: vplan.jc,
            smooth_a: vplan.smooth_a,
            smooth_b: vplan.smooth_b,
            case_tag: vplan.case_tag,
        })
    }

    pub fn fields(&self) -> [f64; 19] {
        [
            self.x0, self.y0, self.psi0, self.s0, self.s1, self.s2, self.kappa0, self.kappa1, self.kappa2, self.kp1, self.v0,
            self.v_aux1, self.v_aux2, self.a0, self.a1, self.a2, self.jc, self.smooth_a, self.smooth_b,
        ]
    }

    fn from_fields(f: [f64; 19], case_tag: VelocityCase) -> Self {
        MotionPlanMessage {
            x0: f[0],
            y0: f[1],
            psi0: f[2],
            s0: f[3],
            s1: f[4],
            s2: f[5],
            kappa0: f[6],
            kappa1: f[7],
            kappa2: f[8],
            kp1: f[9],
            v0: f[10],
            v_aux1: f[11],
            v_aux2: f[12],
            a0: f[13],
            a1: f[14],
            a2: f[15],
            jc: f[16],
            smooth_a: f[17],
            smooth_b: f[18],
            case_tag,
        }
    }

    pub fn to_bytes(&self) -> [u8; MESSAGE_LEN] {
        let mut out = [0u8; MESSAGE_LEN];
        out[..4].copy_from_slice(&MAGIC);
        out[4] = VERSION;
        out[5] = self.case_tag.tag();
        for (k, v) in self.fields().iter().enumerate() {
            let at = PAYLOAD_START + 8 * k;
            out[at..at + 8].copy_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[..CRC_START]);
        out[CRC_START..].copy_from_slice(&crc.to_le_bytes());
        out
    }

    /// Parses and validates a record.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() != MESSAGE_LEN {
            return Err(CodecError::Length { expected: MESSAGE_LEN, got: bytes.len() });
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
        if magic != MAGIC {
            return Err(CodecError::Magic { got: magic });
        }
        if bytes[4] != VERSION {
            return Err(CodecError::Version { got: bytes[4] });
        }
        let stored = u32::from_le_bytes(bytes[CRC_START..].try_into().expect("length checked"));
        let computed = crc32fast::hash(&bytes[..CRC_START]);
        if stored != computed {
            return Err(CodecError::Checksum { stored, computed });
        }
        let case_tag = VelocityCase::from_tag(bytes[5]).ok_or(CodecError::CaseTag { got: bytes[5] })?;
        let mut f = [0.0; 19];
        for (k, v) in f.iter_mut().enumerate() {
            let at = PAYLOAD_START + 8 * k;
            *v = f64::from_le_bytes(bytes[at..at + 8].try_into().expect("length checked"));
        }
        let msg = MotionPlanMessage::from_fields(f, case_tag);
        msg.validate()?;
        Ok(msg)
    }

    /// Checks every field, naming the first one that fails.
    pub fn validate(&self) -> Result<(), CodecError> {
        for (name, v) in FIELD_NAMES.iter().zip(self.fields()) {
            if !v.is_finite() {
                return Err(CodecError::NonFinite { field: name, value: v });
            }
        }
        let invariant = |field: &'static str, reason: &str| Err(CodecError::Invariant { field, reason: reason.into() });
        if self.s0 <= 0.0 {
            return invariant("s0", "must be positive");
        }
        if self.s1 < 0.0 {
            return invariant("s1", "must not be negative");
        }
        if self.s2 <= 0.0 {
            return invariant("s2", "must be positive");
        }
        for (field, v) in [("v0", self.v0), ("v_aux1", self.v_aux1), ("v_aux2", self.v_aux2)] {
            if v < 0.0 {
                return invariant(field, "speed must not be negative");
            }
        }
        if self.jc <= 0.0 {
            return invariant("jc", "must be positive");
        }
        for (field, v) in [("smooth_a", self.smooth_a), ("smooth_b", self.smooth_b)] {
            if v < 0.0 {
                return invariant(field, "must not be negative");
            }
        }
        if let Err(e) = self.velocity_plan().validate() {
            let field = if matches!(e, VelocityError::SmoothingOverrun { junction: 1, .. }) { "smooth_a" } else { "smooth_b" };
            return Err(CodecError::Invariant { field, reason: e.to_string() });
        }
        Ok(())
    }

    fn velocity_plan(&self) -> SmoothedVelocityPlan {
        SmoothedVelocityPlan {
            case_tag: self.case_tag,
            v0: self.v0,
            v_aux1: self.v_aux1,
            v_aux2: self.v_aux2,
            a0: self.a0,
            a1: self.a1,
            a2: self.a2,
            jc: self.jc,
            s0: self.s0,
            s1: self.s1,
            s2: self.s2,
            smooth_a: self.smooth_a,
            smooth_b: self.smooth_b,
        }
    }

    /// Rebuilds the path (recovering `κ′0`, `κ′2`) and the speed plan.
    pub fn to_plan(&self) -> Result<MotionPlan, CodecError> {
        self.validate()?;
        let path = ThreeClothoidPath::from_params(
            Pose2D { x: self.x0, y: self.y0, psi: self.psi0 },
            self.s0,
            self.s1,
            self.s2,
            self.kappa0,
            self.kappa1,
            self.kappa2,
            self.kp1,
        )?;
        Ok(MotionPlan { path, velocity: self.velocity_plan() })
    }
}

/// Serializes a path and its speed plan.
pub fn encode(path: &ThreeClothoidPath, vplan: &SmoothedVelocityPlan) -> Result<[u8; MESSAGE_LEN], CodecError> {
    Ok(MotionPlanMessage::from_plan(path, vplan)?.to_bytes())
}

/// Parses a record back into a path and speed plan.
pub fn decode(bytes: &[u8]) -> Result<MotionPlan, CodecError> {
    MotionPlanMessage::from_bytes(bytes)?.to_plan()
}

/// One row of a reconstructed trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub kappa: f64,
    pub v: f64,
    pub a: f64,
    pub t: f64,
}

/// Samples a plan at `ds` plus the breakpoints and the end point.
pub fn sample_trajectory(plan: &MotionPlan, ds: f64) -> Result<Vec<TrajectorySample>, CodecError> {
    let path = &plan.path;
    let profile = plan.velocity.profile()?;
    let grid = sample_grid(path.s_f(), &path.breakpoints(), ds).map_err(PathError::from)?;
    let mut out = Vec::with_capacity(grid.len());
    for s in grid {
        let pose = path.pose_at(s).map_err(PathError::from)?;
        let kappa = curvature_at(path, s).map_err(PathError::from)?;
        let pt = profile.evaluate(s)?;
        let t = if s > 0.0 && pt.v <= 0.0 { return Err(VelocityError::StoppedFlow { s }.into()) } else { pt.t };
        out.push(TrajectorySample { s, x: pose.x, y: pose.y, psi: pose.psi, kappa, v: pt.v, a: pt.a, t });
    }
    Ok(out)
}

/// Decodes a message into trajectory samples every `ds` metres.
pub fn reconstruct(msg: &MotionPlanMessage, ds: f64) -> Result<Vec<TrajectorySample>, CodecError> {
    sample_trajectory(&msg.to_plan()?, ds)
}
