use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StyleKind {
    Component,
    Connector,
    Style,
}

impl StyleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StyleKind::Component => "Component",
            StyleKind::Connector => "Connector",
            StyleKind::Style => "Style",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Components,
    Connectors,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Components => "components",
            Domain::Connectors => "connectors",
        }
    }
}

/// Structural constraint language: quantifiers over the finite component and
/// connector sets of a topology snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    /// Multi-variable quantifiers range over pairwise-distinct elements.
    Forall {
        domain: Domain,
        vars: Vec<String>,
        body: Box<Formula>,
    },
    Exists {
        domain: Domain,
        vars: Vec<String>,
        body: Box<Formula>,
    },
    InStyle {
        var: String,
        style: String,
    },
    Connected {
        left: String,
        right: String,
    },
    Attached {
        element: String,
        connector: String,
    },
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
}

impl Formula {
    fn prec(&self) -> u8 {
        match self {
            Formula::Implies(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            Formula::Not(_) => 4,
            _ => 5,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.prec();
        if p < min {
            f.write_str("(")?;
        }
        match self {
            Formula::Forall { vars, body, .. } => {
                write!(f, "forall({} | ", vars.join(", "))?;
                body.fmt_prec(f, 0)?;
                f.write_str(")")?;
            }
            Formula::Exists { vars, body, .. } => {
                write!(f, "exists({} | ", vars.join(", "))?;
                body.fmt_prec(f, 0)?;
                f.write_str(")")?;
            }
            Formula::InStyle { var, style } => write!(f, "{var} in style {style}")?,
            Formula::Connected { left, right } => write!(f, "{left} connected to {right}")?,
            Formula::Attached { element, connector } => write!(f, "{element} attached to {connector}")?,
            Formula::And(a, b) => {
                a.fmt_prec(f, 3)?;
                f.write_str(" and ")?;
                b.fmt_prec(f, 4)?;
            }
            Formula::Or(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" or ")?;
                b.fmt_prec(f, 3)?;
            }
            Formula::Implies(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" implies ")?;
                b.fmt_prec(f, 1)?;
            }
            Formula::Not(a) => {
                f.write_str("not ")?;
                a.fmt_prec(f, 4)?;
            }
        }
        if p < min {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub domain: Domain,
    pub formula: Formula,
}

/// A named, parameterised property such as `connected`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub name: String,
    pub params: Vec<(String, String)>,
    pub domain: Domain,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleDef {
    pub name: String,
    pub extends: StyleKind,
    pub elements: Vec<StyleDef>,
    pub constraints: Vec<Constraint>,
    pub analyses: Vec<Analysis>,
}

impl StyleDef {
    pub fn element(name: &str, extends: StyleKind) -> Self {
        StyleDef { name: name.to_string(), extends, elements: vec![], constraints: vec![], analyses: vec![] }
    }

    /// Source text of this definition in the style language.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        self.write_source(&mut out, 0);
        out
    }

    fn write_source(&self, out: &mut String, indent: usize) {
        let pad = "  ".repeat(indent);
        let simple = self.elements.is_empty() && self.constraints.is_empty() && self.analyses.is_empty();
        out.push_str(&format!("{} is style", self.name));
        if self.extends != StyleKind::Style || simple {
            out.push_str(&format!(" extending {}", self.extends.as_str()));
        }
        if simple {
            return;
        }
        out.push_str(" where {\n");
        if !self.elements.is_empty() {
            out.push_str(&format!("{pad}elements\n"));
            for e in &self.elements {
                out.push_str(&format!("{pad}  "));
                e.write_source(out, indent + 1);
                out.push('\n');
            }
        }
        if !self.constraints.is_empty() {
            out.push_str(&format!("{pad}constraints\n"));
            let mut groups: Vec<(Domain, Vec<&Formula>)> = Vec::new();
            for c in &self.constraints {
                match groups.last_mut() {
                    Some((d, fs)) if *d == c.domain => fs.push(&c.formula),
                    _ => groups.push((c.domain, vec![&c.formula])),
                }
            }
            let blocks: Vec<String> = groups
                .iter()
                .map(|(d, fs)| {
                    let body: Vec<String> = fs.iter().map(|f| f.to_string()).collect();
                    format!("{pad}  to {} apply {{ {} }}", d.as_str(), body.join(", "))
                })
                .collect();
            out.push_str(&blocks.join(",\n"));
            out.push_str(";\n");
        }
        if !self.analyses.is_empty() {
            out.push_str(&format!("{pad}analysis\n"));
            for a in &self.analyses {
                let params: Vec<String> = a.params.iter().map(|(n, s)| format!("{n} in style {s}")).collect();
                out.push_str(&format!(
                    "{pad}  {} is AAL_property parameters {}; property to {} apply {{ {} }}\n",
                    a.name,
                    params.join(", "),
                    a.domain.as_str(),
                    a.formula
                ));
            }
        }
        out.push_str(&format!("{pad}}}"));
    }
}
