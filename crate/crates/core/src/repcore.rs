//! Character tables of cyclic and dihedral groups and exact trilinear-form
//! multiplicities, computed two independent ways: class-sum character
//! arithmetic and an explicit matrix-averaging oracle.

use crate::cyclotomic::{
    add, conj, mul, nonneg_integer_part, scalar_mul, zeta, CycloElt, Rational,
};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_traits::One;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

/// A finite group admitted by the engine: cyclic of order n or dihedral of
/// order 2n with presentation <r, s | r^n = s^2 = 1, s r s = r^-1>.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupSpec {
    Cyclic(u64),
    Dihedral(u64),
}

impl GroupSpec {
    pub fn order(&self) -> u64 {
        match self {
            GroupSpec::Cyclic(n) => *n,
            GroupSpec::Dihedral(n) => 2 * n,
        }
    }

    pub fn rotation_order(&self) -> u64 {
        match self {
            GroupSpec::Cyclic(n) | GroupSpec::Dihedral(n) => *n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GroupSpec::Cyclic(n) if *n >= 1 => Ok(()),
            GroupSpec::Dihedral(n) if *n >= 3 => Ok(()),
            GroupSpec::Cyclic(n) => Err(Error::usage(format!("Cyclic({n}) requires n >= 1"))),
            GroupSpec::Dihedral(n) => Err(Error::usage(format!("Dihedral({n}) requires n >= 3"))),
        }
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupSpec::Cyclic(n) => write!(f, "Cyclic({n})"),
            GroupSpec::Dihedral(n) => write!(f, "Dihedral({n})"),
        }
    }
}

#[derive(serde::Serialize, serde::Deserialize)]
struct GroupSpecRepr {
    kind: String,
    n: u64,
}

impl serde::Serialize for GroupSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            GroupSpec::Cyclic(n) => GroupSpecRepr {
                kind: "cyclic".into(),
                n: *n,
            },
            GroupSpec::Dihedral(n) => GroupSpecRepr {
                kind: "dihedral".into(),
                n: *n,
            },
        };
        repr.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for GroupSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GroupSpecRepr::deserialize(d)?;
        let g = match repr.kind.as_str() {
            "cyclic" => GroupSpec::Cyclic(repr.n),
            "dihedral" => GroupSpec::Dihedral(repr.n),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "unknown group kind {other:?}"
                )))
            }
        };
        g.validate().map_err(serde::de::Error::custom)?;
        Ok(g)
    }
}

/// A conjugacy class: representative word in the generators plus its size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjClass {
    pub rep: String,
    pub size: u64,
}

/// A stable irreducible-representation label together with its dimension.
///
/// Grammar: "triv" | "sgn" | "sgn'" | "sgn''" | "V_<j>" (1 <= j < n/2) for
/// dihedral groups, "chi_<k>" (0 <= k < n) for cyclic groups.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IrrepLabel {
    pub name: String,
    pub dim: u32,
}

impl fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// Parses an irrep label string against a group, validating range constraints.
pub fn parse_label(g: GroupSpec, s: &str) -> Result<IrrepLabel> {
    g.validate()?;
    let err = || Error::usage(format!("label {s:?} is not an irrep of {g}"));
    match g {
        GroupSpec::Cyclic(n) => {
            if s == "triv" {
                return Ok(IrrepLabel {
                    name: "chi_0".into(),
                    dim: 1,
                });
            }
            let k: u64 = s.strip_prefix("chi_").ok_or_else(err)?.parse().map_err(|_| err())?;
            if k < n {
                Ok(IrrepLabel {
                    name: format!("chi_{k}"),
                    dim: 1,
                })
            } else {
                Err(err())
            }
        }
        GroupSpec::Dihedral(n) => match s {
            "triv" | "sgn" => Ok(IrrepLabel {
                name: s.into(),
                dim: 1,
            }),
            "sgn'" | "sgn''" if n % 2 == 0 => Ok(IrrepLabel {
                name: s.into(),
                dim: 1,
            }),
            _ => {
                let j: u64 = s.strip_prefix("V_").ok_or_else(err)?.parse().map_err(|_| err())?;
                if j >= 1 && 2 * j < n {
                    Ok(IrrepLabel {
                        name: format!("V_{j}"),
                        dim: 2,
                    })
                } else {
                    Err(err())
                }
            }
        },
    }
}

/// Complete character table with exact cyclotomic values.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    pub group: GroupSpec,
    pub classes: Vec<ConjClass>,
    pub rows: Vec<(IrrepLabel, Vec<CycloElt>)>,
}

impl CharacterTable {
    pub fn row(&self, label: &IrrepLabel) -> Result<&[CycloElt]> {
        self.rows
            .iter()
            .find(|(l, _)| l.name == label.name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| {
                Error::usage(format!("label {} is not in the table of {}", label, self.group))
            })
    }

    pub fn labels(&self) -> Vec<IrrepLabel> {
        self.rows.iter().map(|(l, _)| l.clone()).collect()
    }

    /// Exact verification of both orthogonality relations and the
    /// sum-of-squared-dimensions identity.
    pub fn verify_axioms(&self) -> Result<()> {
        let g = self.group;
        let n = g.rotation_order();
        let order = g.order();
        let inv_order = Rational::new(BigInt::one(), BigInt::from(order));
        let one = CycloElt::one(n);
        let zero = CycloElt::zero(n);

        let dim_sq: u64 = self.rows.iter().map(|(l, _)| (l.dim as u64).pow(2)).sum();
        if dim_sq != order {
            return Err(Error::internal(format!(
                "{g}: sum of squared dims {dim_sq} != group order {order}"
            )));
        }
        let class_sum: u64 = self.classes.iter().map(|c| c.size).sum();
        if class_sum != order {
            return Err(Error::internal(format!(
                "{g}: class sizes sum to {class_sum}, not {order}"
            )));
        }

        // Row orthogonality.
        for (i, (_, chi_i)) in self.rows.iter().enumerate() {
            for (j, (_, chi_j)) in self.rows.iter().enumerate() {
                let mut s = CycloElt::zero(n);
                for (c, class) in self.classes.iter().enumerate() {
                    let term = mul(&chi_i[c], &conj(&chi_j[c]))?;
                    let term = scalar_mul(
                        &Rational::from_integer(BigInt::from(class.size)),
                        &term,
                    );
                    s = add(&s, &term)?;
                }
                let s = scalar_mul(&inv_order, &s);
                let expect = if i == j { &one } else { &zero };
                if &s != expect {
                    return Err(Error::internal(format!(
                        "{g}: row orthogonality fails at rows {i},{j}"
                    )));
                }
            }
        }

        // Column orthogonality.
        for (c1, cl1) in self.classes.iter().enumerate() {
            for (c2, _) in self.classes.iter().enumerate() {
                let mut s = CycloElt::zero(n);
                for (_, chi) in &self.rows {
                    s = add(&s, &mul(&chi[c1], &conj(&chi[c2]))?)?;
                }
                let expect = if c1 == c2 {
                    CycloElt::from_rational(
                        n,
                        Rational::new(BigInt::from(order), BigInt::from(cl1.size)),
                    )
                } else {
                    zero.clone()
                };
                if s != expect {
                    return Err(Error::internal(format!(
                        "{g}: column orthogonality fails at classes {c1},{c2}"
                    )));
                }
            }
        }
        Ok(())
    }
}

static TABLE_CACHE: Lazy<Mutex<HashMap<GroupSpec, Arc<CharacterTable>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// The character table of g, built once and cached.
pub fn character_table(g: GroupSpec) -> Result<Arc<CharacterTable>> {
    g.validate()?;
    if let Some(t) = TABLE_CACHE.lock().unwrap().get(&g) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(build_table(g));
    TABLE_CACHE
        .lock()
        .unwrap()
        .insert(g, Arc::clone(&table));
    Ok(table)
}

fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

fn build_table(g: GroupSpec) -> CharacterTable {
    match g {
        GroupSpec::Cyclic(n) => {
            let classes = (0..n)
                .map(|k| ConjClass {
                    rep: if k == 0 { "1".into() } else { format!("r^{k}") },
                    size: 1,
                })
                .collect();
            let rows = (0..n)
                .map(|j| {
                    let label = IrrepLabel {
                        name: format!("chi_{j}"),
                        dim: 1,
                    };
                    let values = (0..n).map(|k| zeta(n, (j * k) as i64)).collect();
                    (label, values)
                })
                .collect();
            CharacterTable {
                group: g,
                classes,
                rows,
            }
        }
        GroupSpec::Dihedral(n) => build_dihedral_table(n),
    }
}

fn build_dihedral_table(n: u64) -> CharacterTable {
    let g = GroupSpec::Dihedral(n);
    let odd = n % 2 == 1;
    let mut classes = Vec::new();
    // Rotation classes {r^k, r^-k}, ascending k.
    let max_k = if odd { (n - 1) / 2 } else { n / 2 };
    for k in 0..=max_k {
        let size = if k == 0 || 2 * k == n { 1 } else { 2 };
        classes.push(ConjClass {
            rep: if k == 0 { "1".into() } else { format!("r^{k}") },
            size,
        });
    }
    // Reflection classes: one for odd n, two for even n.
    if odd {
        classes.push(ConjClass {
            rep: "s".into(),
            size: n,
        });
    } else {
        classes.push(ConjClass {
            rep: "s".into(),
            size: n / 2,
        });
        classes.push(ConjClass {
            rep: "rs".into(),
            size: n / 2,
        });
    }

    let rot_range: Vec<u64> = (0..=max_k).collect();
    let mut rows: Vec<(IrrepLabel, Vec<CycloElt>)> = Vec::new();

    let one_dim = |name: &str, on_rot: &dyn Fn(u64) -> i64, on_s: i64, on_rs: i64| {
        let mut values: Vec<CycloElt> = rot_range
            .iter()
            .map(|&k| CycloElt::from_rational(n, rat(on_rot(k))))
            .collect();
        values.push(CycloElt::from_rational(n, rat(on_s)));
        if !odd {
            values.push(CycloElt::from_rational(n, rat(on_rs)));
        }
        (
            IrrepLabel {
                name: name.into(),
                dim: 1,
            },
            values,
        )
    };

    rows.push(one_dim("triv", &|_| 1, 1, 1));
    rows.push(one_dim("sgn", &|_| 1, -1, -1));
    if !odd {
        rows.push(one_dim("sgn'", &|k| if k % 2 == 0 { 1 } else { -1 }, 1, -1));
        rows.push(one_dim("sgn''", &|k| if k % 2 == 0 { 1 } else { -1 }, -1, 1));
    }

    let two_dim_max = if odd { (n - 1) / 2 } else { n / 2 - 1 };
    for j in 1..=two_dim_max {
        let mut values: Vec<CycloElt> = rot_range
            .iter()
            .map(|&k| {
                add(
                    &zeta(n, (j * k) as i64),
                    &zeta(n, -((j * k) as i64)),
                )
                .expect("same modulus")
            })
            .collect();
        values.push(CycloElt::zero(n));
        if !odd {
            values.push(CycloElt::zero(n));
        }
        rows.push((
            IrrepLabel {
                name: format!("V_{j}"),
                dim: 2,
            },
            values,
        ));
    }

    CharacterTable {
        group: g,
        classes,
        rows,
    }
}

/// dim Hom_G(rho_a x rho_b x rho_c, triv) via the class-sum character formula.
pub fn trilinear_multiplicity(
    g: GroupSpec,
    a: &IrrepLabel,
    b: &IrrepLabel,
    c: &IrrepLabel,
) -> Result<u64> {
    let table = character_table(g)?;
    let (ra, rb, rc) = (table.row(a)?, table.row(b)?, table.row(c)?);
    let n = g.rotation_order();
    let mut sum = CycloElt::zero(n);
    for (i, class) in table.classes.iter().enumerate() {
        let prod = mul(&mul(&ra[i], &rb[i])?, &rc[i])?;
        let prod = scalar_mul(&Rational::from_integer(BigInt::from(class.size)), &prod);
        sum = add(&sum, &prod)?;
    }
    let sum = scalar_mul(
        &Rational::new(BigInt::one(), BigInt::from(g.order())),
        &sum,
    );
    nonneg_integer_part(&sum).ok_or_else(|| {
        Error::internal(format!(
            "trilinear character sum for {g} ({a},{b},{c}) is not a nonnegative integer"
        ))
    })
}

/// Multiplicities of every irreducible in rho_a x rho_b.
pub fn tensor_decompose(
    g: GroupSpec,
    a: &IrrepLabel,
    b: &IrrepLabel,
) -> Result<Vec<(IrrepLabel, u64)>> {
    let table = character_table(g)?;
    let (ra, rb) = (table.row(a)?, table.row(b)?);
    let n = g.rotation_order();
    let inv_order = Rational::new(BigInt::one(), BigInt::from(g.order()));
    let mut out = Vec::new();
    for (label, rc) in &table.rows {
        let mut sum = CycloElt::zero(n);
        for (i, class) in table.classes.iter().enumerate() {
            let prod = mul(&mul(&ra[i], &rb[i])?, &conj(&rc[i]))?;
            let prod = scalar_mul(&Rational::from_integer(BigInt::from(class.size)), &prod);
            sum = add(&sum, &prod)?;
        }
        let sum = scalar_mul(&inv_order, &sum);
        let m = nonneg_integer_part(&sum).ok_or_else(|| {
            Error::internal(format!(
                "tensor multiplicity for {g} ({a},{b} -> {label}) is not a nonnegative integer"
            ))
        })?;
        out.push((label.clone(), m));
    }
    let balance: u64 = out.iter().map(|(l, m)| m * l.dim as u64).sum();
    if balance != (a.dim as u64) * (b.dim as u64) {
        return Err(Error::internal(format!(
            "tensor decomposition of {a} x {b} over {g} does not balance dimensions"
        )));
    }
    Ok(out)
}

/// A dense matrix over one cyclotomic field.
pub type CycloMatrix = Vec<Vec<CycloElt>>;

fn mat_mul(n: u64, a: &CycloMatrix, b: &CycloMatrix) -> CycloMatrix {
    let rows = a.len();
    let inner = b.len();
    let cols = b[0].len();
    let mut out = vec![vec![CycloElt::zero(n); cols]; rows];
    for i in 0..rows {
        for k in 0..inner {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..cols {
                if b[k][j].is_zero() {
                    continue;
                }
                let term = mul(&a[i][k], &b[k][j]).expect("same modulus");
                out[i][j] = add(&out[i][j], &term).expect("same modulus");
            }
        }
    }
    out
}

fn mat_add_assign(a: &mut CycloMatrix, b: &CycloMatrix) {
    for (ra, rb) in a.iter_mut().zip(b) {
        for (xa, xb) in ra.iter_mut().zip(rb) {
            *xa = add(xa, xb).expect("same modulus");
        }
    }
}

fn mat_scale(r: &Rational, a: &CycloMatrix) -> CycloMatrix {
    a.iter()
        .map(|row| row.iter().map(|x| scalar_mul(r, x)).collect())
        .collect()
}

fn kron(n: u64, a: &CycloMatrix, b: &CycloMatrix) -> CycloMatrix {
    let (ar, ac) = (a.len(), a[0].len());
    let (br, bc) = (b.len(), b[0].len());
    let mut out = vec![vec![CycloElt::zero(n); ac * bc]; ar * br];
    for i in 0..ar {
        for j in 0..ac {
            if a[i][j].is_zero() {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[i * br + k][j * bc + l] =
                        mul(&a[i][j], &b[k][l]).expect("same modulus");
                }
            }
        }
    }
    out
}

/// Matrix model of one irreducible on a single group element.
fn rep_matrix(g: GroupSpec, label: &IrrepLabel, t: u64, refl: bool) -> CycloMatrix {
    let n = g.rotation_order();
    match g {
        GroupSpec::Cyclic(_) => {
            let k: u64 = label.name.strip_prefix("chi_").unwrap().parse().unwrap();
            vec![vec![zeta(n, (k * t) as i64)]]
        }
        GroupSpec::Dihedral(_) => match label.name.as_str() {
            "triv" => vec![vec![CycloElt::one(n)]],
            "sgn" => vec![vec![CycloElt::from_rational(n, rat(if refl { -1 } else { 1 }))]],
            "sgn'" => {
                let v = if t % 2 == 0 { 1 } else { -1 };
                vec![vec![CycloElt::from_rational(n, rat(v))]]
            }
            "sgn''" => {
                let mut v = if t % 2 == 0 { 1 } else { -1 };
                if refl {
                    v = -v;
                }
                vec![vec![CycloElt::from_rational(n, rat(v))]]
            }
            name => {
                let j: u64 = name.strip_prefix("V_").unwrap().parse().unwrap();
                let rot = vec![
                    vec![zeta(n, (j * t) as i64), CycloElt::zero(n)],
                    vec![CycloElt::zero(n), zeta(n, -((j * t) as i64))],
                ];
                if refl {
                    let swap = vec![
                        vec![CycloElt::zero(n), CycloElt::one(n)],
                        vec![CycloElt::one(n), CycloElt::zero(n)],
                    ];
                    mat_mul(n, &rot, &swap)
                } else {
                    rot
                }
            }
        },
    }
}

/// The averaging operator (1/|G|) sum_x rho_a(x) (x) rho_b(x) (x) rho_c(x),
/// an exact idempotent projecting onto the invariants of the triple tensor.
pub fn oracle_projector(
    g: GroupSpec,
    a: &IrrepLabel,
    b: &IrrepLabel,
    c: &IrrepLabel,
) -> Result<CycloMatrix> {
    let table = character_table(g)?;
    for l in [a, b, c] {
        table.row(l)?;
    }
    let n = g.rotation_order();
    let dim = (a.dim * b.dim * c.dim) as usize;
    let mut p = vec![vec![CycloElt::zero(n); dim]; dim];
    let refls: &[bool] = match g {
        GroupSpec::Cyclic(_) => &[false],
        GroupSpec::Dihedral(_) => &[false, true],
    };
    for &refl in refls {
        for t in 0..n {
            let ma = rep_matrix(g, a, t, refl);
            let mb = rep_matrix(g, b, t, refl);
            let mc = rep_matrix(g, c, t, refl);
            let m = kron(n, &kron(n, &ma, &mb), &mc);
            mat_add_assign(&mut p, &m);
        }
    }
    Ok(mat_scale(
        &Rational::new(BigInt::one(), BigInt::from(g.order())),
        &p,
    ))
}

/// Independent brute-force multiplicity: trace of the averaging operator,
/// after verifying the operator is exactly idempotent.
pub fn oracle_multiplicity(
    g: GroupSpec,
    a: &IrrepLabel,
    b: &IrrepLabel,
    c: &IrrepLabel,
) -> Result<u64> {
    let p = oracle_projector(g, a, b, c)?;
    let n = g.rotation_order();
    let p2 = mat_mul(n, &p, &p);
    if p2 != p {
        return Err(Error::internal(format!(
            "averaging operator for {g} ({a},{b},{c}) is not idempotent"
        )));
    }
    let mut tr = CycloElt::zero(n);
    for (i, row) in p.iter().enumerate() {
        tr = add(&tr, &row[i])?;
    }
    nonneg_integer_part(&tr).ok_or_else(|| {
        Error::internal(format!(
            "averaging trace for {g} ({a},{b},{c}) is not a nonnegative integer"
        ))
    })
}
