//! Hierarchical spreading: an orthogonal base split into per-class sub-bases,
//! intra-class signature matrices, and the resulting per-user codes.
//!
//! A user `k` of class `c` spreads with `c_k = U_c w_k`, where `w_k` is a
//! column of `W_c`. Codes of different classes are orthogonal because they
//! live in disjoint column spans of `U`; classmates share `U_c` and are told
//! apart only through `W_c`.

mod base;
mod intra;
mod resources;

pub use base::{build_orthogonal_base, partition_base, BaseKind, OrthogonalBase};
pub use intra::{build_intra_class_codes, gold_sequence, IntraClassMethod};
pub use resources::{map_to_resources, DataLayout, DataPlacement, RbGeometry, Re, ResourceMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// One service class. Classes are indexed from 1 in decreasing target rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceClass {
    pub index: usize,
    /// `K_c`
    pub users: usize,
    /// `N_c`, the width of the class sub-base.
    pub width: usize,
    /// `P_c` in watts.
    pub power_w: f64,
    /// `r_c` in bits/s/Hz.
    pub target_rate: f64,
}

/// `true` when `K_C/N_C > … > K_1/N_1`.
pub fn overloading_ordering_holds(classes: &[ServiceClass]) -> bool {
    classes.windows(2).all(|w| {
        (w[1].users as f64 / w[1].width as f64) > (w[0].users as f64 / w[0].width as f64)
    })
}

fn validate_classes(classes: &[ServiceClass]) -> Result<()> {
    for (pos, class) in classes.iter().enumerate() {
        if class.index != pos + 1 {
            return Err(Error::InvalidConfig(format!(
                "class at position {pos} has index {}, expected {}",
                class.index,
                pos + 1
            )));
        }
        if class.width == 0 {
            return Err(Error::InvalidConfig(format!("class {} has N_c = 0", class.index)));
        }
        if !(class.power_w >= 0.0) || !class.power_w.is_finite() {
            return Err(Error::InvalidConfig(format!("class {} has invalid power", class.index)));
        }
    }
    if classes.windows(2).any(|w| w[0].target_rate <= w[1].target_rate) {
        return Err(Error::InvalidConfig(
            "classes must be indexed in strictly decreasing target rate".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ClassCodebook {
    /// `U_c`, an `N × N_c` slice of the base.
    pub sub_base: CMat,
    /// `W_c`, `N_c × K_c`.
    pub signatures: CMat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UserSlot {
    /// Position of the class in the class table (0-based).
    pub class: usize,
    /// Column `i_k` of `W_c` (0-based).
    pub column: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CodebookSpec {
    pub base: BaseKind,
    pub method: IntraClassMethod,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Codebook {
    pub base: OrthogonalBase,
    pub classes: Vec<ClassCodebook>,
    users: Vec<UserSlot>,
}

impl Codebook {
    /// Builds the full codebook. Users are numbered globally, class 1 first;
    /// user `k` of class `c` takes column `k` of `W_c`. Each class draws its
    /// `W_c` from an independent stream of `spec.seed`.
    pub fn build(spec: &CodebookSpec, classes: &[ServiceClass]) -> Result<Self> {
        validate_classes(classes)?;
        let n: usize = classes.iter().map(|c| c.width).sum();
        let base = build_orthogonal_base(n, spec.base)?;
        let dims: Vec<usize> = classes.iter().map(|c| c.width).collect();
        let subs = partition_base(&base, &dims)?;
        if !overloading_ordering_holds(classes) {
            log::warn!(
                "overloading factors K_c/N_c are not strictly increasing with the class index"
            );
        }
        let mut out = Vec::with_capacity(classes.len());
        let mut users = Vec::new();
        for (pos, (class, sub_base)) in classes.iter().zip(subs).enumerate() {
            let signatures = build_intra_class_codes(
                class.width,
                class.users,
                spec.method,
                spec.seed,
                class.index as u64,
            )?;
            users.extend((0..class.users).map(|column| UserSlot { class: pos, column }));
            out.push(ClassCodebook { sub_base, signatures });
        }
        Ok(Codebook { base, classes: out, users })
    }

    pub fn spreading_length(&self) -> usize {
        self.base.len()
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    pub fn slot(&self, user: usize) -> Result<UserSlot> {
        self.users.get(user).copied().ok_or(Error::UnassignedUser(user))
    }

    /// `w_k`.
    pub fn intra_signature(&self, user: usize) -> Result<CVec> {
        let slot = self.slot(user)?;
        Ok(self.classes[slot.class].signatures.column(slot.column).to_owned())
    }

    /// `c_k = U_c w_k`.
    pub fn spreading_code(&self, user: usize) -> Result<CVec> {
        let slot = self.slot(user)?;
        let class = &self.classes[slot.class];
        Ok(class.sub_base.dot(&class.signatures.column(slot.column)))
    }

    pub fn codes(&self) -> Vec<CVec> {
        (0..self.user_count())
            .map(|k| self.spreading_code(k).expect("assigned user"))
            .collect()
    }
}

/// Diagonal of `C_k = diag(c_k) ⊗ I_M`.
pub fn signature_diagonal(code: &CVec, antennas: usize) -> CVec {
    CVec::from_shape_fn(code.len() * antennas, |a| code[a / antennas])
}

/// Dense `C_k = diag(c_k) ⊗ I_M`.
pub fn signature_matrix(code: &CVec, antennas: usize) -> CMat {
    let d = signature_diagonal(code, antennas);
    let mut out = CMat::zeros((d.len(), d.len()));
    for (i, v) in d.iter().enumerate() {
        out[[i, i]] = *v;
    }
    out
}

pub fn code_inner(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{adjoint, trace};

    pub(crate) fn reference_classes() -> Vec<ServiceClass> {
        vec![
            ServiceClass { index: 1, users: 6, width: 3, power_w: 0.2, target_rate: 2.0 },
            ServiceClass { index: 2, users: 18, width: 3, power_w: 0.05, target_rate: 0.5 },
        ]
    }

    fn spec() -> CodebookSpec {
        CodebookSpec { base: BaseKind::Dft, method: IntraClassMethod::UnitModulusRandom, seed: 1 }
    }

    #[test]
    fn codes_have_unit_norm_and_class_structure() {
        let cb = Codebook::build(&spec(), &reference_classes()).unwrap();
        assert_eq!(cb.user_count(), 24);
        for k in 0..24 {
            let c = cb.spreading_code(k).unwrap();
            let n: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        for j in 0..24 {
            for k in 0..24 {
                let (cj, ck) = (cb.spreading_code(j).unwrap(), cb.spreading_code(k).unwrap());
                let ip = code_inner(&cj, &ck);
                if cb.slot(j).unwrap().class != cb.slot(k).unwrap().class {
                    assert!(ip.norm() <= 1e-12);
                } else {
                    let wip = code_inner(&cb.intra_signature(j).unwrap(), &cb.intra_signature(k).unwrap());
                    assert!((ip - wip).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn canonical_signature_selects_the_sub_base_column() {
        let classes = vec![ServiceClass { index: 1, users: 1, width: 2, power_w: 1.0, target_rate: 1.0 }];
        let mut cb = Codebook::build(&spec(), &classes).unwrap();
        cb.classes[0].signatures = ndarray::array![[C64::new(1.0, 0.0)], [C64::new(0.0, 0.0)]];
        let c = cb.spreading_code(0).unwrap();
        assert_eq!(c, cb.classes[0].sub_base.column(0));
    }

    #[test]
    fn unknown_user_is_rejected() {
        let cb = Codebook::build(&spec(), &reference_classes()).unwrap();
        assert!(matches!(cb.spreading_code(24), Err(Error::UnassignedUser(24))));
    }

    #[test]
    fn class_table_must_be_rate_ordered() {
        let mut classes = reference_classes();
        classes[1].target_rate = 3.0;
        assert!(Codebook::build(&spec(), &classes).is_err());
    }

    #[test]
    fn overloading_check() {
        assert!(overloading_ordering_holds(&reference_classes()));
        let mut classes = reference_classes();
        classes[1].users = 2;
        assert!(!overloading_ordering_holds(&classes));
        // violation only warns
        assert!(Codebook::build(&spec(), &classes).is_ok());
    }

    #[test]
    fn signature_matrix_identities() {
        let n = 3;
        let m = 2;
        let flat = CVec::from_elem(n, C64::new(1.0 / (n as f64).sqrt(), 0.0));
        let ck = signature_matrix(&flat, m);
        for i in 0..n * m {
            for j in 0..n * m {
                let expect = if i == j { 1.0 / (n as f64).sqrt() } else { 0.0 };
                assert!((ck[[i, j]] - C64::new(expect, 0.0)).norm() < 1e-15);
            }
        }
        let cb = Codebook::build(&spec(), &reference_classes()).unwrap();
        let code = cb.spreading_code(7).unwrap();
        let ck = signature_matrix(&code, 4);
        let gram = adjoint(&ck.view()).dot(&ck);
        for i in 0..24 {
            assert!((gram[[i, i]].re - code[i / 4].norm_sqr()).abs() < 1e-15);
        }
        let tr = trace(&ck.dot(&adjoint(&ck.view())).view());
        assert!((tr.re - 4.0).abs() < 1e-12);
    }
}
