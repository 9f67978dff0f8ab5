// SPDX-License-Identifier: MIT
//! Recursive-descent parser for `.cdag` text.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::error::{DslError, DslErrorKind, Position};
use super::lexer::{tokenize, Tok, Token};
use super::{
    check_mechanism_values, Assumption, EdgeDecl, MechanismDecl, ModelDocument, NodeDecl, NodeKind,
    NodeRole,
};

#[derive(Debug, Clone)]
enum Value {
    Ident(String),
    Str(String),
    Num(f64),
    List(Vec<(Value, Position)>),
    Map(Vec<Attr>),
}

#[derive(Debug, Clone)]
struct Attr {
    key: String,
    key_pos: Position,
    value: Value,
    value_pos: Position,
}

impl Value {
    fn describe(&self) -> &'static str {
        match self {
            Value::Ident(_) => "identifier",
            Value::Str(_) => "string",
            Value::Num(_) => "number",
            Value::List(_) => "list",
            Value::Map(_) => "map",
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

/// Parses `.cdag` text into a document, checking every document invariant.
/// Diagnostics carry the line and column of the offending token.
pub fn parse(source: &str) -> Result<ModelDocument, DslError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, at: 0 };
    let doc = p.document()?;
    // Positions were checked inline; this catches anything cross-cutting.
    doc.validate()?;
    Ok(doc)
}

fn syntax(pos: Position, msg: impl Into<String>) -> DslError {
    DslError::at(pos, DslErrorKind::Syntax(msg.into()))
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<Position, DslError> {
        let t = self.next();
        if t.tok == want {
            Ok(t.pos)
        } else {
            Err(syntax(
                t.pos,
                format!("expected {}, found {}", want.describe(), t.tok.describe()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Position), DslError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Ok((s, t.pos)),
            other => Err(syntax(
                t.pos,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn string(&mut self, what: &str) -> Result<(String, Position), DslError> {
        let t = self.next();
        match t.tok {
            Tok::Str(s) => Ok((s, t.pos)),
            other => Err(syntax(
                t.pos,
                format!(
                    "expected {what} (a quoted string), found {}",
                    other.describe()
                ),
            )),
        }
    }

    fn document(&mut self) -> Result<ModelDocument, DslError> {
        let (kw, pos) = self.ident("`model`")?;
        if kw != "model" {
            return Err(syntax(pos, format!("expected `model`, found `{kw}`")));
        }
        let (name, _) = self.string("model name")?;
        self.expect(Tok::LBrace)?;

        let mut b = Builder::new(name);
        loop {
            let t = self.peek().clone();
            match &t.tok {
                Tok::RBrace => {
                    self.next();
                    break;
                }
                Tok::Ident(kw) => {
                    self.next();
                    match kw.as_str() {
                        "assume" => {
                            let (tag, tag_pos) = self.ident("assumption tag")?;
                            let (text, _) = self.string("assumption text")?;
                            b.assume(tag, tag_pos, text)?;
                        }
                        "node" => {
                            let (name, name_pos) = self.ident("node name")?;
                            let attrs = self.opt_attrs()?;
                            b.node(name, name_pos, attrs)?;
                        }
                        "edge" | "disturbance" => {
                            let (from, from_pos) = self.ident("edge source")?;
                            self.expect(Tok::Arrow)?;
                            let (to, to_pos) = self.ident("edge target")?;
                            let attrs = self.opt_attrs()?;
                            if kw == "edge" {
                                b.edge(from, from_pos, to, to_pos, attrs)?;
                            } else {
                                b.disturbance(from, from_pos, to, to_pos, attrs)?;
                            }
                        }
                        "mechanism" => {
                            let (node, node_pos) = self.ident("mechanism node")?;
                            let (ty, ty_pos) = self.ident("mechanism type")?;
                            let attrs = self.attrs()?;
                            b.mechanism(node, node_pos, ty, ty_pos, attrs)?;
                        }
                        other => {
                            return Err(syntax(
                                t.pos,
                                format!(
                                    "unknown statement `{other}` (expected assume, node, edge, disturbance, mechanism)"
                                ),
                            ))
                        }
                    }
                }
                other => {
                    return Err(syntax(
                        t.pos,
                        format!("expected a statement or `}}`, found {}", other.describe()),
                    ))
                }
            }
        }
        let t = self.next();
        if t.tok != Tok::Eof {
            return Err(syntax(
                t.pos,
                format!("unexpected {} after model block", t.tok.describe()),
            ));
        }
        b.finish()
    }

    fn opt_attrs(&mut self) -> Result<Vec<Attr>, DslError> {
        if self.peek().tok == Tok::LBrace {
            self.attrs()
        } else {
            Ok(Vec::new())
        }
    }

    fn attrs(&mut self) -> Result<Vec<Attr>, DslError> {
        self.expect(Tok::LBrace)?;
        let mut out: Vec<Attr> = Vec::new();
        loop {
            if self.peek().tok == Tok::RBrace {
                self.next();
                return Ok(out);
            }
            let (key, key_pos) = self.ident("attribute name")?;
            self.expect(Tok::Colon)?;
            let value_pos = self.peek().pos;
            let value = self.value()?;
            if out.iter().any(|a| a.key == key) {
                return Err(DslError::at(key_pos, DslErrorKind::DuplicateAttribute(key)));
            }
            out.push(Attr {
                key,
                key_pos,
                value,
                value_pos,
            });
            if self.peek().tok == Tok::Comma {
                self.next();
            }
        }
    }

    fn value(&mut self) -> Result<Value, DslError> {
        let t = self.next();
        match t.tok {
            Tok::Ident(s) => Ok(Value::Ident(s)),
            Tok::Str(s) => Ok(Value::Str(s)),
            Tok::Num(n) => Ok(Value::Num(n)),
            Tok::LBracket => {
                let mut items = Vec::new();
                loop {
                    if self.peek().tok == Tok::RBracket {
                        self.next();
                        return Ok(Value::List(items));
                    }
                    let pos = self.peek().pos;
                    items.push((self.value()?, pos));
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    }
                }
            }
            Tok::LBrace => {
                self.at -= 1;
                Ok(Value::Map(self.attrs()?))
            }
            other => Err(syntax(
                t.pos,
                format!("expected a value, found {}", other.describe()),
            )),
        }
    }
}

/// Mechanism target, its position, and the parents it names.
type PendingMechanism = (String, Position, Vec<(String, Position)>);

/// Accumulates declarations and enforces invariants with source positions.
struct Builder {
    doc: ModelDocument,
    tags: HashSet<String>,
    nodes: HashMap<String, Position>,
    edges: HashSet<(String, String)>,
    pending_edges: Vec<(usize, Position, Position)>,
    pending_traces: Vec<(String, Position)>,
    pending_mech: Vec<PendingMechanism>,
    mechanisms: BTreeMap<String, MechanismDecl>,
    exposure: Option<String>,
    outcome: Option<String>,
}

fn invalid(pos: Position, key: &str, message: impl Into<String>) -> DslError {
    DslError::at(
        pos,
        DslErrorKind::InvalidValue {
            key: key.to_string(),
            message: message.into(),
        },
    )
}

fn expect_ident(attr: &Attr) -> Result<&str, DslError> {
    match &attr.value {
        Value::Ident(s) => Ok(s),
        other => Err(invalid(
            attr.value_pos,
            &attr.key,
            format!("expected an identifier, found a {}", other.describe()),
        )),
    }
}

fn expect_str(attr: &Attr) -> Result<String, DslError> {
    match &attr.value {
        Value::Str(s) => Ok(s.clone()),
        other => Err(invalid(
            attr.value_pos,
            &attr.key,
            format!("expected a string, found a {}", other.describe()),
        )),
    }
}

fn expect_num(attr: &Attr) -> Result<f64, DslError> {
    match &attr.value {
        Value::Num(n) => Ok(*n),
        other => Err(invalid(
            attr.value_pos,
            &attr.key,
            format!("expected a number, found a {}", other.describe()),
        )),
    }
}

fn expect_bool(attr: &Attr) -> Result<bool, DslError> {
    match expect_ident(attr)? {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(invalid(
            attr.value_pos,
            &attr.key,
            format!("expected true or false, found `{other}`"),
        )),
    }
}

fn expect_ident_list(attr: &Attr) -> Result<Vec<(String, Position)>, DslError> {
    match &attr.value {
        Value::List(items) => items
            .iter()
            .map(|(v, pos)| match v {
                Value::Ident(s) => Ok((s.clone(), *pos)),
                other => Err(invalid(
                    *pos,
                    &attr.key,
                    format!("expected identifiers, found a {}", other.describe()),
                )),
            })
            .collect(),
        other => Err(invalid(
            attr.value_pos,
            &attr.key,
            format!("expected a list, found a {}", other.describe()),
        )),
    }
}

fn expect_weights(attr: &Attr) -> Result<Vec<(String, Position, f64)>, DslError> {
    match &attr.value {
        Value::Map(entries) => entries
            .iter()
            .map(|e| Ok((e.key.clone(), e.key_pos, expect_num(e)?)))
            .collect(),
        other => Err(invalid(
            attr.value_pos,
            &attr.key,
            format!("expected a map of weights, found a {}", other.describe()),
        )),
    }
}

fn expect_rows(attr: &Attr) -> Result<Vec<Vec<f64>>, DslError> {
    let Value::List(rows) = &attr.value else {
        return Err(invalid(
            attr.value_pos,
            &attr.key,
            "expected a list of rows",
        ));
    };
    rows.iter()
        .map(|(row, pos)| match row {
            Value::List(cells) => cells
                .iter()
                .map(|(c, cpos)| match c {
                    Value::Num(n) => Ok(*n),
                    _ => Err(invalid(*cpos, &attr.key, "expected a probability")),
                })
                .collect(),
            _ => Err(invalid(*pos, &attr.key, "expected a row list")),
        })
        .collect()
}

fn reject_unknown(attrs: &[Attr], allowed: &[&str]) -> Result<(), DslError> {
    for a in attrs {
        if !allowed.contains(&a.key.as_str()) {
            return Err(DslError::at(
                a.key_pos,
                DslErrorKind::UnknownAttribute(a.key.clone()),
            ));
        }
    }
    Ok(())
}

impl Builder {
    fn new(name: String) -> Self {
        Builder {
            doc: ModelDocument::new(name),
            tags: HashSet::new(),
            nodes: HashMap::new(),
            edges: HashSet::new(),
            pending_edges: Vec::new(),
            pending_traces: Vec::new(),
            pending_mech: Vec::new(),
            mechanisms: BTreeMap::new(),
            exposure: None,
            outcome: None,
        }
    }

    fn assume(&mut self, tag: String, pos: Position, text: String) -> Result<(), DslError> {
        if !self.tags.insert(tag.clone()) {
            return Err(DslError::at(pos, DslErrorKind::DuplicateAssumption(tag)));
        }
        self.doc.assumptions.push(Assumption { tag, text });
        Ok(())
    }

    fn traces(&mut self, attr: &Attr) -> Result<Vec<String>, DslError> {
        let list = expect_ident_list(attr)?;
        let mut out = Vec::with_capacity(list.len());
        for (t, pos) in list {
            // assumptions may be declared after their first use
            self.pending_traces.push((t.clone(), pos));
            out.push(t);
        }
        Ok(out)
    }

    fn node(&mut self, name: String, pos: Position, attrs: Vec<Attr>) -> Result<(), DslError> {
        reject_unknown(&attrs, &["kind", "role", "traces", "label", "controllable"])?;
        let mut decl = NodeDecl::new(name.clone(), NodeKind::Observed);
        for a in &attrs {
            match a.key.as_str() {
                "kind" => {
                    decl.kind = match expect_ident(a)? {
                        "observed" => NodeKind::Observed,
                        "latent" => NodeKind::Latent,
                        other => {
                            return Err(invalid(
                                a.value_pos,
                                "kind",
                                format!("expected observed or latent, found `{other}`"),
                            ))
                        }
                    }
                }
                "role" => {
                    decl.role = match expect_ident(a)? {
                        "exposure" => NodeRole::Exposure,
                        "outcome" => NodeRole::Outcome,
                        "covariate" => NodeRole::Covariate,
                        "disturbance" => NodeRole::Disturbance,
                        other => {
                            return Err(invalid(
                                a.value_pos,
                                "role",
                                format!(
                            "expected exposure, outcome, covariate or disturbance, found `{other}`"
                        ),
                            ))
                        }
                    }
                }
                "traces" => decl.traces = self.traces(a)?,
                "label" => decl.label = Some(expect_str(a)?),
                "controllable" => decl.controllable = Some(expect_bool(a)?),
                _ => unreachable!(),
            }
        }
        self.push_node(decl, pos)
    }

    fn push_node(&mut self, decl: NodeDecl, pos: Position) -> Result<(), DslError> {
        if self.nodes.contains_key(&decl.name) {
            return Err(DslError::at(pos, DslErrorKind::DuplicateNode(decl.name)));
        }
        let slot = match decl.role {
            NodeRole::Exposure => Some(&mut self.exposure),
            NodeRole::Outcome => Some(&mut self.outcome),
            _ => None,
        };
        if let Some(slot) = slot {
            if slot.is_some() {
                return Err(DslError::at(
                    pos,
                    DslErrorKind::DuplicateRole {
                        role: decl.role,
                        name: decl.name,
                    },
                ));
            }
            *slot = Some(decl.name.clone());
        }
        self.nodes.insert(decl.name.clone(), pos);
        self.doc.nodes.push(decl);
        Ok(())
    }

    fn edge_decl(
        &mut self,
        from: String,
        from_pos: Position,
        to: String,
        to_pos: Position,
        attrs: &[Attr],
    ) -> Result<EdgeDecl, DslError> {
        reject_unknown(attrs, &["traces", "mechanism"])?;
        if from == to {
            return Err(DslError::at(from_pos, DslErrorKind::SelfLoop(from)));
        }
        if !self.edges.insert((from.clone(), to.clone())) {
            return Err(DslError::at(
                from_pos,
                DslErrorKind::DuplicateEdge { from, to },
            ));
        }
        let mut e = EdgeDecl::new(from, to);
        for a in attrs {
            match a.key.as_str() {
                "traces" => e.traces = self.traces(a)?,
                "mechanism" => e.mechanism_tag = Some(expect_str(a)?),
                _ => unreachable!(),
            }
        }
        self.pending_edges
            .push((self.doc.edges.len(), from_pos, to_pos));
        Ok(e)
    }

    fn edge(
        &mut self,
        from: String,
        from_pos: Position,
        to: String,
        to_pos: Position,
        attrs: Vec<Attr>,
    ) -> Result<(), DslError> {
        let e = self.edge_decl(from, from_pos, to, to_pos, &attrs)?;
        self.doc.edges.push(e);
        Ok(())
    }

    /// `disturbance U -> S { traces: [..] }` declares a latent disturbance
    /// node `U` and the edge `U -> S`, both carrying the given traces.
    fn disturbance(
        &mut self,
        from: String,
        from_pos: Position,
        to: String,
        to_pos: Position,
        attrs: Vec<Attr>,
    ) -> Result<(), DslError> {
        reject_unknown(&attrs, &["traces", "label"])?;
        let mut node =
            NodeDecl::new(from.clone(), NodeKind::Latent).with_role(NodeRole::Disturbance);
        let mut edge_attrs = Vec::new();
        for a in &attrs {
            match a.key.as_str() {
                "traces" => {
                    node.traces = expect_ident_list(a)?.into_iter().map(|(t, _)| t).collect();
                    edge_attrs.push(a.clone());
                }
                "label" => node.label = Some(expect_str(a)?),
                _ => unreachable!(),
            }
        }
        self.push_node(node, from_pos)?;
        let e = self.edge_decl(from, from_pos, to, to_pos, &edge_attrs)?;
        self.doc.edges.push(e);
        Ok(())
    }

    fn mechanism(
        &mut self,
        node: String,
        node_pos: Position,
        ty: String,
        ty_pos: Position,
        attrs: Vec<Attr>,
    ) -> Result<(), DslError> {
        if self.mechanisms.contains_key(&node) {
            return Err(DslError::at(
                node_pos,
                DslErrorKind::DuplicateMechanism(node),
            ));
        }
        let find = |key: &str| attrs.iter().find(|a| a.key == key);
        let required = |key: &str| {
            find(key).ok_or_else(|| {
                DslError::at(ty_pos, DslErrorKind::MissingAttribute(key.to_string()))
            })
        };
        let mut refs: Vec<(String, Position)> = Vec::new();
        let mut weights_of = |a: Option<&Attr>| -> Result<BTreeMap<String, f64>, DslError> {
            let mut out = BTreeMap::new();
            if let Some(a) = a {
                for (k, pos, w) in expect_weights(a)? {
                    if out.insert(k.clone(), w).is_some() {
                        return Err(DslError::at(pos, DslErrorKind::DuplicateAttribute(k)));
                    }
                    refs.push((k, pos));
                }
            }
            Ok(out)
        };
        let decl = match ty.as_str() {
            "linear_gaussian" => {
                reject_unknown(&attrs, &["intercept", "noise_sd", "weights"])?;
                MechanismDecl::LinearGaussian {
                    intercept: find("intercept").map(expect_num).transpose()?.unwrap_or(0.0),
                    noise_sd: expect_num(required("noise_sd")?)?,
                    weights: weights_of(find("weights"))?,
                }
            }
            "logistic_binary" => {
                reject_unknown(&attrs, &["intercept", "weights"])?;
                MechanismDecl::LogisticBinary {
                    intercept: find("intercept").map(expect_num).transpose()?.unwrap_or(0.0),
                    weights: weights_of(find("weights"))?,
                }
            }
            "table_cpd" => {
                reject_unknown(&attrs, &["levels", "parents", "rows"])?;
                let levels_attr = required("levels")?;
                let levels = expect_num(levels_attr)?;
                if levels.fract() != 0.0 || !(2.0..=u32::MAX as f64).contains(&levels) {
                    return Err(invalid(
                        levels_attr.value_pos,
                        "levels",
                        "expected an integer of at least 2",
                    ));
                }
                let parents = find("parents")
                    .map(expect_ident_list)
                    .transpose()?
                    .unwrap_or_default();
                refs.extend(parents.iter().cloned());
                MechanismDecl::TableCpd {
                    levels: levels as u32,
                    parents: parents.into_iter().map(|(p, _)| p).collect(),
                    rows: expect_rows(required("rows")?)?,
                }
            }
            other => {
                return Err(invalid(
                    ty_pos,
                    "mechanism",
                    format!(
                        "unknown mechanism type `{other}` (expected linear_gaussian, logistic_binary, table_cpd)"
                    ),
                ))
            }
        };
        check_mechanism_values(&node, &decl).map_err(|kind| DslError::at(ty_pos, kind))?;
        self.pending_mech.push((node.clone(), node_pos, refs));
        self.mechanisms.insert(node, decl);
        Ok(())
    }

    fn finish(mut self) -> Result<ModelDocument, DslError> {
        for (i, from_pos, to_pos) in &self.pending_edges {
            let e = &self.doc.edges[*i];
            if !self.nodes.contains_key(&e.from) {
                return Err(DslError::at(
                    *from_pos,
                    DslErrorKind::UnknownEndpoint(e.from.clone()),
                ));
            }
            if !self.nodes.contains_key(&e.to) {
                return Err(DslError::at(
                    *to_pos,
                    DslErrorKind::UnknownEndpoint(e.to.clone()),
                ));
            }
        }
        for (tag, pos) in &self.pending_traces {
            if !self.tags.contains(tag) {
                return Err(DslError::at(*pos, DslErrorKind::UnknownTrace(tag.clone())));
            }
        }
        for (node, pos, refs) in &self.pending_mech {
            if !self.nodes.contains_key(node) {
                return Err(DslError::at(
                    *pos,
                    DslErrorKind::UnknownMechanismNode(node.clone()),
                ));
            }
            for (r, rpos) in refs {
                if !self.nodes.contains_key(r) {
                    return Err(DslError::at(
                        *rpos,
                        DslErrorKind::UnknownEndpoint(r.clone()),
                    ));
                }
            }
        }
        self.doc.mechanisms = self.mechanisms;
        Ok(self.doc)
    }
}
