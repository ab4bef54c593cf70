//! Recursive-descent parser for the optimization, infrastructure and
//! concrete_infrastructure layers. Other top-level blocks are kept verbatim.

use std::collections::{HashMap, HashSet};

use super::error::DomlError;
use super::lexer::{tokenize, Token, TokenKind};
use super::model::*;

/// Parses a whole DOML document.
pub fn parse_document(src: &str) -> Result<Document, DomlError> {
    let tokens = tokenize(src)?;
    let mut p = Parser::new(src, tokens);
    p.document()
}

/// Parses text holding exactly one `optimization <name> { ... }` block.
pub fn parse_optimization_layer(src: &str) -> Result<OptimizationSpec, DomlError> {
    let tokens = tokenize(src)?;
    let mut p = Parser::new(src, tokens);
    let spec = p.optimization_block()?;
    if let Some(tok) = p.peek() {
        return Err(DomlError::syntax(
            tok.line,
            tok.column,
            format!("unexpected {} after optimization block", tok.kind.describe()),
        ));
    }
    Ok(spec)
}

struct Reference {
    kind: &'static str,
    name: String,
    line: usize,
    column: usize,
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    warnings: Vec<Warning>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, tokens: Vec<Token>) -> Self {
        Parser {
            src,
            tokens,
            pos: 0,
            warnings: Vec::new(),
        }
    }

    // ---- token helpers ----

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    /// Position just past the last character, used for end-of-input errors.
    fn eof_position(&self) -> (usize, usize) {
        let line = self.src.matches('\n').count() + 1;
        let last = self.src.rsplit('\n').next().unwrap_or("");
        (line, last.chars().count() + 1)
    }

    fn next(&mut self, expected: &str) -> Result<Token, DomlError> {
        match self.tokens.get(self.pos) {
            Some(t) => {
                self.pos += 1;
                Ok(t.clone())
            }
            None => {
                let (line, column) = self.eof_position();
                Err(DomlError::syntax(
                    line,
                    column,
                    format!("unexpected end of input, expected {expected}"),
                ))
            }
        }
    }

    fn unexpected(tok: &Token, expected: &str) -> DomlError {
        DomlError::syntax(
            tok.line,
            tok.column,
            format!("expected {expected}, found {}", tok.kind.describe()),
        )
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, DomlError> {
        let what = kind.describe();
        let tok = self.next(&what)?;
        if tok.kind == kind {
            Ok(tok)
        } else {
            Err(Self::unexpected(&tok, &what))
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Token), DomlError> {
        let tok = self.next(what)?;
        match &tok.kind {
            TokenKind::Ident(s) => Ok((s.clone(), tok)),
            _ => Err(Self::unexpected(&tok, what)),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<Token, DomlError> {
        let tok = self.next(&format!("`{kw}`"))?;
        match &tok.kind {
            TokenKind::Ident(s) if s == kw => Ok(tok),
            _ => Err(Self::unexpected(&tok, &format!("`{kw}`"))),
        }
    }

    fn expect_str(&mut self, what: &str) -> Result<(String, Token), DomlError> {
        let tok = self.next(what)?;
        match &tok.kind {
            TokenKind::Str(s) => Ok((s.clone(), tok)),
            _ => Err(Self::unexpected(&tok, what)),
        }
    }

    fn expect_number(&mut self, what: &str) -> Result<(f64, String, Token), DomlError> {
        let tok = self.next(what)?;
        match &tok.kind {
            TokenKind::Number { value, text } => Ok((*value, text.clone(), tok)),
            _ => Err(Self::unexpected(&tok, what)),
        }
    }

    /// True (and consumes the token) when the next token is `}`.
    fn eat_rbrace(&mut self) -> bool {
        if matches!(self.peek_kind(), Some(TokenKind::RBrace)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn warn(&mut self, tok: &Token, message: impl Into<String>) {
        self.warnings.push(Warning {
            line: tok.line,
            column: tok.column,
            message: message.into(),
        });
    }

    // ---- document ----

    fn document(&mut self) -> Result<Document, DomlError> {
        let mut doc = Document::default();
        let mut seen_blocks: HashSet<(String, String)> = HashSet::new();
        while let Some(tok) = self.peek().cloned() {
            let keyword = match &tok.kind {
                TokenKind::Ident(s) => s.clone(),
                _ => return Err(Self::unexpected(&tok, "a top-level block keyword")),
            };
            let block = match keyword.as_str() {
                "optimization" => {
                    if doc.optimization().is_some() {
                        return Err(duplicate(&tok, "optimization layer", &keyword));
                    }
                    let spec = self.optimization_block()?;
                    let close = &self.tokens[self.pos - 1];
                    doc.optimization_insert_at = Some(insertion_point(self.src, close.start));
                    Block::Optimization(spec)
                }
                "infrastructure" => {
                    if doc.infrastructure().is_some() {
                        return Err(duplicate(&tok, "infrastructure layer", &keyword));
                    }
                    Block::Infrastructure(self.infrastructure_block()?)
                }
                "concrete_infrastructure" => Block::Concrete(self.concrete_block()?),
                _ => Block::Other(self.raw_block()?),
            };
            let name = match &block {
                Block::Optimization(o) => Some(o.name.clone()),
                Block::Infrastructure(i) => Some(i.name.clone()),
                Block::Concrete(c) => Some(c.name.clone()),
                Block::Other(r) => r.name.clone(),
            };
            if let Some(name) = name {
                if !seen_blocks.insert((keyword.clone(), name.clone())) {
                    return Err(duplicate(&tok, &format!("{keyword} block"), &name));
                }
            }
            doc.blocks.push(block);
        }
        self.check_concrete_maps(&doc);
        doc.warnings = std::mem::take(&mut self.warnings);
        Ok(doc)
    }

    fn raw_block(&mut self) -> Result<RawBlock, DomlError> {
        let (keyword, first) = self.expect_ident("a block keyword")?;
        let name = match self.peek_kind() {
            Some(TokenKind::Ident(s)) => Some(s.clone()),
            _ => None,
        };
        loop {
            let tok = self.next("`{`")?;
            match tok.kind {
                TokenKind::LBrace => break,
                TokenKind::RBrace => return Err(Self::unexpected(&tok, "`{`")),
                _ => {}
            }
        }
        let mut depth = 1usize;
        let mut end = first.end;
        while depth > 0 {
            let tok = self.next("`}`")?;
            match tok.kind {
                TokenKind::LBrace => depth += 1,
                TokenKind::RBrace => depth -= 1,
                _ => {}
            }
            end = tok.end;
        }
        Ok(RawBlock {
            keyword,
            name,
            text: self.src[first.start..end].to_string(),
        })
    }

    // ---- optimization layer ----

    fn optimization_block(&mut self) -> Result<OptimizationSpec, DomlError> {
        let head = self.expect_keyword("optimization")?;
        let (name, _) = self.expect_ident("optimization layer name")?;
        self.expect(TokenKind::LBrace)?;
        let mut objectives: Option<Vec<ObjectiveSpec>> = None;
        let mut requirements: Option<Vec<Requirement>> = None;
        let mut solutions: Vec<SolutionRecord> = Vec::new();
        let mut solution_names = HashSet::new();
        while !self.eat_rbrace() {
            let (kw, tok) = self.expect_ident("`objectives`, `nonfunctional_requirements` or `solution`")?;
            match kw.as_str() {
                "objectives" => {
                    if objectives.is_some() {
                        return Err(duplicate(&tok, "section", "objectives"));
                    }
                    objectives = Some(self.objectives_section()?);
                }
                "nonfunctional_requirements" => {
                    if requirements.is_some() {
                        return Err(duplicate(&tok, "section", "nonfunctional_requirements"));
                    }
                    requirements = Some(self.requirements_section()?);
                }
                "solution" => {
                    let (sol, name_tok) = self.solution_block()?;
                    if !solution_names.insert(sol.name.clone()) {
                        return Err(duplicate(&name_tok, "solution", &sol.name));
                    }
                    solutions.push(sol);
                }
                _ => {
                    return Err(Self::unexpected(
                        &tok,
                        "`objectives`, `nonfunctional_requirements` or `solution`",
                    ))
                }
            }
        }
        let objectives = objectives.unwrap_or_default();
        if objectives.is_empty() {
            return Err(DomlError::InvalidObjective {
                line: head.line,
                column: head.column,
                message: format!("optimization layer `{name}` declares no objectives"),
            });
        }
        Ok(OptimizationSpec {
            name,
            objectives,
            requirements: requirements.unwrap_or_default(),
            priority: 0,
            solutions,
        })
    }

    fn objectives_section(&mut self) -> Result<Vec<ObjectiveSpec>, DomlError> {
        self.expect(TokenKind::LBrace)?;
        let mut out: Vec<ObjectiveSpec> = Vec::new();
        while !self.eat_rbrace() {
            let (raw, tok) = self.expect_str("an objective name string")?;
            let name = raw.parse::<Objective>().map_err(|message| DomlError::InvalidObjective {
                line: tok.line,
                column: tok.column,
                message,
            })?;
            self.expect(TokenKind::Arrow)?;
            let (dir, dir_tok) = self.expect_ident("`min` or `max`")?;
            let direction = dir.parse::<Direction>().map_err(|message| DomlError::InvalidObjective {
                line: dir_tok.line,
                column: dir_tok.column,
                message,
            })?;
            if out.iter().any(|o| o.name == name) {
                return Err(DomlError::InvalidObjective {
                    line: tok.line,
                    column: tok.column,
                    message: format!("objective `{name}` declared twice"),
                });
            }
            if out.len() == 3 {
                return Err(DomlError::InvalidObjective {
                    line: tok.line,
                    column: tok.column,
                    message: "at most three objectives may be declared".into(),
                });
            }
            out.push(ObjectiveSpec { name, direction });
        }
        Ok(out)
    }

    fn requirements_section(&mut self) -> Result<Vec<Requirement>, DomlError> {
        self.expect(TokenKind::LBrace)?;
        let mut out: Vec<Requirement> = Vec::new();
        let mut ids = HashSet::new();
        let mut elements_seen = false;
        while !self.eat_rbrace() {
            let (id, id_tok) = self.expect_ident("a requirement identifier")?;
            if !ids.insert(id.clone()) {
                return Err(duplicate(&id_tok, "requirement", &id));
            }
            let req = self.requirement_body(&id, &id_tok)?;
            if let Requirement::KeyValue(kv) = &req {
                if kv.key == ELEMENTS_KEY {
                    if elements_seen {
                        return Err(duplicate(&id_tok, "requirement key", ELEMENTS_KEY));
                    }
                    elements_seen = true;
                }
            }
            out.push(req);
        }
        Ok(out)
    }

    fn requirement_body(&mut self, id: &str, id_tok: &Token) -> Result<Requirement, DomlError> {
        let malformed = |tok: &Token, message: &str| DomlError::MalformedRequirement {
            line: tok.line,
            column: tok.column,
            id: id.to_string(),
            message: message.to_string(),
        };
        const SHAPES: &str = "expected `max|min <number> => \"target\"`, `values \"...\" => \"target\"` or `=> \"value\"`";

        let desc_tok = self.next("a requirement description")?;
        let description = match &desc_tok.kind {
            TokenKind::Str(s) => s.clone(),
            _ => return Err(malformed(&desc_tok, "expected a quoted description")),
        };
        let form_tok = self.next("a requirement body")?;
        match &form_tok.kind {
            TokenKind::Ident(kw) if kw == "max" || kw == "min" => {
                let kind = if kw == "max" { BoundKind::Max } else { BoundKind::Min };
                let num_tok = self.next("a threshold")?;
                let threshold = match &num_tok.kind {
                    TokenKind::Number { value, .. } if value.is_finite() => *value,
                    _ => return Err(malformed(&num_tok, "expected a finite numeric threshold")),
                };
                self.arrow_or_malformed(id)?;
                let (target_raw, target_tok) = self.target_string(id)?;
                let target = Target::parse(&target_raw);
                if target.metric().is_none() {
                    self.warn(
                        &target_tok,
                        format!("requirement `{id}`: bound target `{target_raw}` is not cost, availability or performance"),
                    );
                }
                Ok(Requirement::Bound(AggregateBound {
                    id: id.to_string(),
                    description,
                    kind,
                    threshold,
                    target,
                }))
            }
            TokenKind::Ident(kw) if kw == "values" => {
                let list_tok = self.next("a value list")?;
                let allowed = match &list_tok.kind {
                    TokenKind::Str(s) => split_list(s),
                    _ => return Err(malformed(&list_tok, "expected a quoted value list")),
                };
                if allowed.is_empty() {
                    return Err(malformed(&list_tok, "value list is empty"));
                }
                self.arrow_or_malformed(id)?;
                let (target_raw, target_tok) = self.target_string(id)?;
                let target = Target::parse(&target_raw);
                if !target.is_categorical() {
                    self.warn(
                        &target_tok,
                        format!("requirement `{id}`: values target `{target_raw}` is not provider or region"),
                    );
                }
                Ok(Requirement::Categorical(CategoricalMatch {
                    id: id.to_string(),
                    description,
                    allowed,
                    target,
                }))
            }
            TokenKind::Arrow => {
                let (value, value_tok) = self.target_string(id)?;
                match description.as_str() {
                    ELEMENTS_KEY => {
                        let items: Vec<&str> = value.split(',').map(str::trim).collect();
                        if items.iter().any(|s| s.is_empty()) {
                            return Err(malformed(&value_tok, "`elements` must be a non-empty comma-separated list"));
                        }
                    }
                    MAX_VM_MEMORY_KEY => {
                        let ok = value.trim().parse::<f64>().is_ok_and(|v| v.is_finite() && v > 0.0);
                        if !ok {
                            return Err(malformed(&value_tok, "`max_VM_memory` must be a positive number"));
                        }
                    }
                    other => {
                        self.warn(id_tok, format!("requirement `{id}`: unknown key `{other}`"));
                    }
                }
                Ok(Requirement::KeyValue(KeyValue {
                    id: id.to_string(),
                    key: description,
                    value,
                }))
            }
            _ => Err(malformed(&form_tok, SHAPES)),
        }
    }

    fn arrow_or_malformed(&mut self, id: &str) -> Result<(), DomlError> {
        let tok = self.next("`=>`")?;
        if tok.kind == TokenKind::Arrow {
            Ok(())
        } else {
            Err(DomlError::MalformedRequirement {
                line: tok.line,
                column: tok.column,
                id: id.to_string(),
                message: format!("expected `=>`, found {}", tok.kind.describe()),
            })
        }
    }

    fn target_string(&mut self, id: &str) -> Result<(String, Token), DomlError> {
        let tok = self.next("a quoted target")?;
        match &tok.kind {
            TokenKind::Str(s) => Ok((s.clone(), tok)),
            _ => Err(DomlError::MalformedRequirement {
                line: tok.line,
                column: tok.column,
                id: id.to_string(),
                message: format!("expected a quoted target, found {}", tok.kind.describe()),
            }),
        }
    }

    fn solution_block(&mut self) -> Result<(SolutionRecord, Token), DomlError> {
        let (name, name_tok) = self.expect_ident("a solution name")?;
        self.expect(TokenKind::LBrace)?;
        let mut objective_values = None;
        let mut decisions = None;
        while !self.eat_rbrace() {
            let (kw, tok) = self.expect_ident("`objectives` or `decisions`")?;
            match kw.as_str() {
                "objectives" => {
                    if objective_values.is_some() {
                        return Err(duplicate(&tok, "section", "objectives"));
                    }
                    self.expect(TokenKind::LBrace)?;
                    let mut values = Vec::new();
                    while !self.eat_rbrace() {
                        let (obj, obj_tok) = self.expect_ident("an objective name")?;
                        let objective = obj.parse::<Objective>().map_err(|message| {
                            DomlError::InvalidObjective {
                                line: obj_tok.line,
                                column: obj_tok.column,
                                message,
                            }
                        })?;
                        let (value, _, _) = self.expect_number("an objective value")?;
                        let unit_tok = self.next("a unit")?;
                        let unit = match &unit_tok.kind {
                            TokenKind::Ident(s) => s.clone(),
                            TokenKind::Symbol(c) => c.to_string(),
                            _ => return Err(Self::unexpected(&unit_tok, "a unit")),
                        };
                        values.push(ObjectiveValue {
                            objective,
                            value,
                            unit,
                        });
                    }
                    objective_values = Some(values);
                }
                "decisions" => {
                    if decisions.is_some() {
                        return Err(duplicate(&tok, "section", "decisions"));
                    }
                    decisions = Some(self.string_list()?);
                }
                _ => return Err(Self::unexpected(&tok, "`objectives` or `decisions`")),
            }
        }
        Ok((
            SolutionRecord {
                name,
                objective_values: objective_values.unwrap_or_default(),
                decisions: decisions.unwrap_or_default(),
            },
            name_tok,
        ))
    }

    fn string_list(&mut self) -> Result<Vec<String>, DomlError> {
        self.expect(TokenKind::LBracket)?;
        let mut out = Vec::new();
        if matches!(self.peek_kind(), Some(TokenKind::RBracket)) {
            self.pos += 1;
            return Ok(out);
        }
        loop {
            let (s, _) = self.expect_str("a quoted element id")?;
            out.push(s);
            let tok = self.next("`,` or `]`")?;
            match tok.kind {
                TokenKind::Comma => continue,
                TokenKind::RBracket => break,
                _ => return Err(Self::unexpected(&tok, "`,` or `]`")),
            }
        }
        Ok(out)
    }

    // ---- infrastructure layer ----

    fn infrastructure_block(&mut self) -> Result<InfrastructureModel, DomlError> {
        self.expect_keyword("infrastructure")?;
        let (name, _) = self.expect_ident("infrastructure layer name")?;
        self.expect(TokenKind::LBrace)?;
        let mut model = InfrastructureModel {
            name,
            ..Default::default()
        };
        let mut names: HashMap<&'static str, HashSet<String>> = HashMap::new();
        let mut refs: Vec<Reference> = Vec::new();
        let mut unique = |kind: &'static str, name: &str, tok: &Token| -> Result<(), DomlError> {
            if names.entry(kind).or_default().insert(name.to_string()) {
                Ok(())
            } else {
                Err(duplicate(tok, kind, name))
            }
        };
        while !self.eat_rbrace() {
            let (kw, tok) = self.expect_ident("`net`, `vm`, `vm_image` or `autoscale_group`")?;
            match kw.as_str() {
                "net" => {
                    let (net, subnet_toks) = self.net_block(&mut refs)?;
                    unique("net", &net.name, &tok)?;
                    for (sub, sub_tok) in net.subnets.iter().zip(&subnet_toks) {
                        unique("subnet", &sub.name, sub_tok)?;
                    }
                    model.networks.push(net);
                }
                "vm" => {
                    let (vm, name_tok) = self.vm_block(&mut refs)?;
                    unique("vm", &vm.name, &name_tok)?;
                    model.vms.push(vm);
                }
                "vm_image" => {
                    let (img_name, name_tok) = self.expect_ident("an image name")?;
                    self.expect(TokenKind::LBrace)?;
                    self.expect_keyword("generates")?;
                    let (generates, gen_tok) = self.expect_ident("a vm name")?;
                    self.expect(TokenKind::RBrace)?;
                    unique("vm_image", &img_name, &name_tok)?;
                    refs.push(Reference {
                        kind: "vm",
                        name: generates.clone(),
                        line: gen_tok.line,
                        column: gen_tok.column,
                    });
                    model.vm_images.push(VmImage {
                        name: img_name,
                        generates,
                    });
                }
                "autoscale_group" => {
                    let (asg_name, name_tok) = self.expect_ident("an autoscale group name")?;
                    self.expect(TokenKind::LBrace)?;
                    let mut vm = None;
                    let mut min = None;
                    let mut max = None;
                    let mut max_tok = None;
                    while !self.eat_rbrace() {
                        let (field, ftok) = self.expect_ident("`vm`, `min` or `max`")?;
                        match field.as_str() {
                            "vm" => {
                                let (v, vtok) = self.vm_block(&mut refs)?;
                                unique("vm", &v.name, &vtok)?;
                                vm = Some(v);
                            }
                            "min" => min = Some(self.count()?),
                            "max" => {
                                max_tok = Some(ftok);
                                max = Some(self.count()?);
                            }
                            _ => return Err(Self::unexpected(&ftok, "`vm`, `min` or `max`")),
                        }
                    }
                    let vm = vm.ok_or_else(|| {
                        DomlError::syntax(name_tok.line, name_tok.column, format!("autoscale group `{asg_name}` has no vm"))
                    })?;
                    let min = min.unwrap_or(0);
                    let max = max.unwrap_or(min);
                    if max < min {
                        let t = max_tok.unwrap_or(name_tok.clone());
                        return Err(DomlError::syntax(t.line, t.column, format!("autoscale group `{asg_name}`: max {max} is below min {min}")));
                    }
                    unique("autoscale_group", &asg_name, &name_tok)?;
                    model.autoscale_groups.push(AutoscaleGroup {
                        name: asg_name,
                        vm,
                        min,
                        max,
                    });
                }
                _ => {
                    return Err(Self::unexpected(
                        &tok,
                        "`net`, `vm`, `vm_image` or `autoscale_group`",
                    ))
                }
            }
        }
        for r in refs {
            let kind_key = if r.kind == "vm" { "vm" } else { "subnet" };
            let known = names.get(kind_key).is_some_and(|s| s.contains(&r.name));
            if !known {
                return Err(DomlError::Unresolved {
                    line: r.line,
                    column: r.column,
                    kind: r.kind.to_string(),
                    name: r.name,
                });
            }
        }
        Ok(model)
    }

    fn count(&mut self) -> Result<u64, DomlError> {
        let (value, text, tok) = self.expect_number("a non-negative integer")?;
        if value < 0.0 || text.contains('.') {
            return Err(DomlError::syntax(tok.line, tok.column, format!("expected a non-negative integer, found `{text}`")));
        }
        text.parse::<u64>()
            .map_err(|_| DomlError::syntax(tok.line, tok.column, "integer out of range"))
    }

    fn net_block(&mut self, refs: &mut Vec<Reference>) -> Result<(Network, Vec<Token>), DomlError> {
        let (name, _) = self.expect_ident("a network name")?;
        self.expect(TokenKind::LBrace)?;
        let mut net = Network {
            name,
            cidr: String::new(),
            protocol: String::new(),
            subnets: Vec::new(),
        };
        let mut subnet_toks = Vec::new();
        while !self.eat_rbrace() {
            let (field, tok) = self.expect_ident("`cidr`, `protocol` or `subnet`")?;
            match field.as_str() {
                "cidr" => net.cidr = self.expect_str("a quoted CIDR")?.0,
                "protocol" => net.protocol = self.expect_str("a quoted protocol")?.0,
                "subnet" => {
                    let (sub_name, sub_tok) = self.expect_ident("a subnet name")?;
                    self.expect(TokenKind::LBrace)?;
                    let mut subnet = Subnet {
                        name: sub_name,
                        cidr: String::new(),
                        connections: Vec::new(),
                    };
                    while !self.eat_rbrace() {
                        let (sf, stok) = self.expect_ident("`cidr` or `connections`")?;
                        match sf.as_str() {
                            "cidr" => subnet.cidr = self.expect_str("a quoted CIDR")?.0,
                            "connections" => {
                                self.expect(TokenKind::LBrace)?;
                                while !self.eat_rbrace() {
                                    let (c, ctok) = self.expect_ident("a subnet name")?;
                                    if matches!(self.peek_kind(), Some(TokenKind::Comma)) {
                                        self.pos += 1;
                                    }
                                    refs.push(Reference {
                                        kind: "subnet",
                                        name: c.clone(),
                                        line: ctok.line,
                                        column: ctok.column,
                                    });
                                    subnet.connections.push(c);
                                }
                            }
                            _ => return Err(Self::unexpected(&stok, "`cidr` or `connections`")),
                        }
                    }
                    net.subnets.push(subnet);
                    subnet_toks.push(sub_tok);
                }
                _ => return Err(Self::unexpected(&tok, "`cidr`, `protocol` or `subnet`")),
            }
        }
        Ok((net, subnet_toks))
    }

    fn vm_block(&mut self, refs: &mut Vec<Reference>) -> Result<(AbstractVm, Token), DomlError> {
        let (name, name_tok) = self.expect_ident("a vm name")?;
        self.expect(TokenKind::LBrace)?;
        let mut vm = AbstractVm {
            name,
            os: String::new(),
            ifaces: Vec::new(),
            storage_gb: None,
        };
        while !self.eat_rbrace() {
            let (field, tok) = self.expect_ident("`os`, `iface` or `sto`")?;
            match field.as_str() {
                "os" => vm.os = self.expect_str("a quoted OS name")?.0,
                "iface" => {
                    let (iface, _) = self.expect_ident("an interface name")?;
                    self.expect(TokenKind::LBrace)?;
                    self.expect_keyword("belongs_to")?;
                    let (subnet, stok) = self.expect_ident("a subnet name")?;
                    self.expect(TokenKind::RBrace)?;
                    refs.push(Reference {
                        kind: "subnet",
                        name: subnet.clone(),
                        line: stok.line,
                        column: stok.column,
                    });
                    vm.ifaces.push(Iface { name: iface, subnet });
                }
                "sto" => {
                    let vtok = self.next("a storage size")?;
                    let size = match &vtok.kind {
                        TokenKind::Str(s) => s.trim().parse::<f64>().ok(),
                        TokenKind::Number { value, .. } => Some(*value),
                        _ => None,
                    };
                    match size {
                        Some(v) if v.is_finite() && v >= 0.0 => vm.storage_gb = Some(v),
                        _ => return Err(DomlError::syntax(vtok.line, vtok.column, "`sto` expects a storage size in GB")),
                    }
                }
                _ => return Err(Self::unexpected(&tok, "`os`, `iface` or `sto`")),
            }
        }
        Ok((vm, name_tok))
    }

    // ---- concrete_infrastructure layer ----

    fn concrete_block(&mut self) -> Result<ConcreteInfrastructure, DomlError> {
        self.expect_keyword("concrete_infrastructure")?;
        let (name, _) = self.expect_ident("concrete infrastructure name")?;
        self.expect(TokenKind::LBrace)?;
        let mut ci = ConcreteInfrastructure {
            name,
            ..Default::default()
        };
        const ITEMS: &str = "`provider`, `vm`, `net`, `vm_image` or `autoscale_group`";
        while !self.eat_rbrace() {
            let (kw, tok) = self.expect_ident(ITEMS)?;
            match kw.as_str() {
                "provider" => {
                    let (provider, _) = self.expect_ident("a provider name")?;
                    self.expect(TokenKind::LBrace)?;
                    let mut storages = Vec::new();
                    while !self.eat_rbrace() {
                        self.expect_keyword("storage")?;
                        let (sname, _) = self.expect_ident("a storage name")?;
                        self.expect(TokenKind::LBrace)?;
                        let mut properties = Vec::new();
                        while !self.eat_rbrace() {
                            self.expect_keyword("properties")?;
                            properties.extend(self.properties()?);
                        }
                        storages.push(ConcreteStorage {
                            name: sname,
                            properties,
                        });
                    }
                    ci.provider_blocks.push(ProviderBlock { provider, storages });
                }
                "vm" | "autoscale_group" => {
                    let (iname, name_tok) = self.expect_ident("a name")?;
                    self.expect(TokenKind::LBrace)?;
                    let mut properties = Vec::new();
                    let mut maps = None;
                    while !self.eat_rbrace() {
                        let (field, ftok) = self.expect_ident("`properties` or `maps`")?;
                        match field.as_str() {
                            "properties" => properties.extend(self.properties()?),
                            "maps" => maps = Some(self.expect_ident("a mapped name")?.0),
                            _ => return Err(Self::unexpected(&ftok, "`properties` or `maps`")),
                        }
                    }
                    let maps = maps.ok_or_else(|| {
                        DomlError::syntax(name_tok.line, name_tok.column, format!("`{iname}` has no `maps` target"))
                    })?;
                    if kw == "vm" {
                        ci.vms.push(ConcreteVm {
                            name: iname,
                            properties,
                            maps,
                        });
                    } else {
                        ci.asgs.push(ConcreteAsg {
                            name: iname,
                            properties,
                            maps,
                        });
                    }
                }
                "net" => {
                    let (nname, _) = self.expect_ident("a network name")?;
                    self.expect(TokenKind::LBrace)?;
                    self.expect_keyword("maps")?;
                    let (maps, _) = self.expect_ident("a mapped name")?;
                    self.expect(TokenKind::RBrace)?;
                    ci.nets.push(ConcreteNet { name: nname, maps });
                }
                "vm_image" => {
                    let (iname, name_tok) = self.expect_ident("an image name")?;
                    self.expect(TokenKind::LBrace)?;
                    let mut image_name = None;
                    let mut maps = None;
                    while !self.eat_rbrace() {
                        let (field, ftok) = self.expect_ident("`image_name` or `maps`")?;
                        match field.as_str() {
                            "image_name" => image_name = Some(self.expect_str("a quoted image name")?.0),
                            "maps" => maps = Some(self.expect_ident("a mapped name")?.0),
                            _ => return Err(Self::unexpected(&ftok, "`image_name` or `maps`")),
                        }
                    }
                    let maps = maps.ok_or_else(|| {
                        DomlError::syntax(name_tok.line, name_tok.column, format!("`{iname}` has no `maps` target"))
                    })?;
                    ci.images.push(ConcreteImage {
                        name: iname,
                        image_name: image_name.unwrap_or_default(),
                        maps,
                    });
                }
                _ => return Err(Self::unexpected(&tok, ITEMS)),
            }
        }
        Ok(ci)
    }

    fn properties(&mut self) -> Result<Vec<Property>, DomlError> {
        self.expect(TokenKind::LBrace)?;
        let mut out = Vec::new();
        while !self.eat_rbrace() {
            let (key, _) = self.expect_ident("a property key")?;
            self.expect(TokenKind::Equals)?;
            let vtok = self.next("a property value")?;
            let value = match &vtok.kind {
                TokenKind::Str(s) => PropertyValue::Text(s.clone()),
                TokenKind::Number { value, text } => PropertyValue::Number {
                    value: *value,
                    decimals: text.split_once('.').map_or(0, |(_, frac)| frac.len()),
                },
                _ => return Err(Self::unexpected(&vtok, "a string or number")),
            };
            out.push(Property { key, value });
        }
        Ok(out)
    }

    /// Concrete `maps` targets that name nothing in the infrastructure layer
    /// produce warnings.
    fn check_concrete_maps(&mut self, doc: &Document) {
        let Some(infra) = doc.infrastructure() else {
            return;
        };
        let vms: HashSet<&str> = infra.vms.iter().map(|v| v.name.as_str()).collect();
        let nets: HashSet<&str> = infra.networks.iter().map(|n| n.name.as_str()).collect();
        let imgs: HashSet<&str> = infra.vm_images.iter().map(|i| i.name.as_str()).collect();
        let asgs: HashSet<&str> = infra.autoscale_groups.iter().map(|a| a.name.as_str()).collect();
        let mut missing = Vec::new();
        for ci in doc.concretizations() {
            missing.extend(ci.vms.iter().filter(|v| !vms.contains(v.maps.as_str())).map(|v| ("vm", v.maps.clone(), ci.name.clone())));
            missing.extend(ci.nets.iter().filter(|n| !nets.contains(n.maps.as_str())).map(|n| ("net", n.maps.clone(), ci.name.clone())));
            missing.extend(ci.images.iter().filter(|i| !imgs.contains(i.maps.as_str())).map(|i| ("vm_image", i.maps.clone(), ci.name.clone())));
            missing.extend(ci.asgs.iter().filter(|a| !asgs.contains(a.maps.as_str())).map(|a| ("autoscale_group", a.maps.clone(), ci.name.clone())));
        }
        for (kind, target, block) in missing {
            self.warnings.push(Warning {
                line: 1,
                column: 1,
                message: format!("{block}: {kind} maps `{target}`, which the infrastructure layer does not declare"),
            });
        }
    }
}

fn duplicate(tok: &Token, kind: &str, name: &str) -> DomlError {
    DomlError::Duplicate {
        line: tok.line,
        column: tok.column,
        kind: kind.to_string(),
        name: name.to_string(),
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .collect()
}

/// Where solution text goes: start of the closing brace's line when that line
/// holds only the brace, otherwise right before the brace.
fn insertion_point(src: &str, brace: usize) -> (usize, bool) {
    let line_start = src[..brace].rfind('\n').map_or(0, |i| i + 1);
    if src[line_start..brace].trim().is_empty() {
        (line_start, false)
    } else {
        (brace, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const FIG2: &str = r#"optimization opt {
  objectives {
    "cost" => min
    "performance" => max
    "availability" => max
  }
  nonfunctional_requirements {
    req1 "cost <= 300" max 300.0 => "cost"
    req2 "availability >= 97%" min 97.0 => "availability"
    req3 "Provider" values "aws" => "provider"
    req4 "max_VM_memory" => "1024"
    req5 "elements" => "VM, Storage"
  }
}
"#;

    #[test]
    fn parses_optimization_layer() {
        let spec = parse_optimization_layer(FIG2).unwrap();
        assert_eq!(spec.name, "opt");
        assert_eq!(
            spec.objectives,
            vec![
                ObjectiveSpec::new(Objective::Cost, Direction::Min),
                ObjectiveSpec::new(Objective::Performance, Direction::Max),
                ObjectiveSpec::new(Objective::Availability, Direction::Max),
            ]
        );
        assert_eq!(spec.requirements.len(), 5);
        assert_eq!(spec.priority, 0);
        assert_eq!(
            spec.requirements[0],
            Requirement::Bound(AggregateBound {
                id: "req1".into(),
                description: "cost <= 300".into(),
                kind: BoundKind::Max,
                threshold: 300.0,
                target: Target::Cost,
            })
        );
        assert_eq!(
            spec.requirements[2],
            Requirement::Categorical(CategoricalMatch {
                id: "req3".into(),
                description: "Provider".into(),
                allowed: vec!["aws".into()],
                target: Target::Provider,
            })
        );
        assert_eq!(spec.elements_value(), Some("VM, Storage"));
        assert_eq!(spec.max_vm_memory(), Some(1024.0));
    }

    #[test]
    fn region_values_split_on_commas() {
        let src = r#"optimization o { objectives { "cost" => min } nonfunctional_requirements {
            req9 "Region" values "europe, us-east" => "region"
        } }"#;
        let spec = parse_optimization_layer(src).unwrap();
        assert_eq!(
            spec.requirements[0],
            Requirement::Categorical(CategoricalMatch {
                id: "req9".into(),
                description: "Region".into(),
                allowed: vec!["europe".into(), "us-east".into()],
                target: Target::Region,
            })
        );
    }

    #[test]
    fn empty_input_is_an_empty_document() {
        let doc = parse_document("").unwrap();
        assert!(doc.is_empty());
        assert!(parse_document("  // nothing here\n").unwrap().is_empty());
    }

    #[test]
    fn rejects_unknown_objective() {
        let err = parse_optimization_layer(r#"optimization o { objectives { "latency" => min } }"#).unwrap_err();
        assert!(matches!(err, DomlError::InvalidObjective { line: 1, column: 31, .. }), "{err:?}");
    }

    #[test]
    fn rejects_bad_direction() {
        let err = parse_optimization_layer(r#"optimization o { objectives { "cost" => lowest } }"#).unwrap_err();
        assert!(matches!(err, DomlError::InvalidObjective { .. }));
    }

    #[test]
    fn rejects_duplicate_objective() {
        let err = parse_optimization_layer(
            r#"optimization o { objectives { "cost" => min "cost" => max } }"#,
        )
        .unwrap_err();
        assert!(matches!(err, DomlError::InvalidObjective { .. }));
    }

    #[test]
    fn rejects_fourth_objective() {
        // Three distinct names exist, so a fourth entry is necessarily a duplicate;
        // the duplicate check fires first.
        let err = parse_optimization_layer(
            r#"optimization o { objectives { "cost" => min "performance" => max "availability" => max "cost" => max } }"#,
        )
        .unwrap_err();
        assert!(matches!(err, DomlError::InvalidObjective { .. }));
    }

    #[test]
    fn rejects_missing_objectives() {
        let err = parse_optimization_layer("optimization o { }").unwrap_err();
        assert!(matches!(err, DomlError::InvalidObjective { line: 1, column: 1, .. }));
    }

    #[test]
    fn malformed_requirement_body() {
        let src = r#"optimization o { objectives { "cost" => min } nonfunctional_requirements {
            req1 "cost" between 3 => "cost"
        } }"#;
        let err = parse_optimization_layer(src).unwrap_err();
        assert!(matches!(err, DomlError::MalformedRequirement { line: 2, column: 25, ref id, .. } if id == "req1"), "{err:?}");
    }

    #[test]
    fn malformed_memory_cap() {
        let src = r#"optimization o { objectives { "cost" => min } nonfunctional_requirements {
            req4 "max_VM_memory" => "lots"
        } }"#;
        assert!(matches!(
            parse_optimization_layer(src).unwrap_err(),
            DomlError::MalformedRequirement { .. }
        ));
    }

    #[test]
    fn empty_elements_entry() {
        let src = r#"optimization o { objectives { "cost" => min } nonfunctional_requirements {
            req5 "elements" => "VM, "
        } }"#;
        assert!(matches!(
            parse_optimization_layer(src).unwrap_err(),
            DomlError::MalformedRequirement { .. }
        ));
    }

    #[test]
    fn unknown_target_is_a_warning() {
        let src = r#"optimization o { objectives { "cost" => min } nonfunctional_requirements {
            req1 "latency" max 3.0 => "latency"
        } }"#;
        let doc = parse_document(src).unwrap();
        assert_eq!(doc.warnings.len(), 1);
        assert_eq!(doc.warnings[0].line, 2);
    }

    #[test]
    fn duplicate_blocks_rejected() {
        let src = "optimization a { objectives { \"cost\" => min } }\noptimization b { objectives { \"cost\" => min } }";
        assert!(matches!(parse_document(src).unwrap_err(), DomlError::Duplicate { line: 2, .. }));
        let src = "extra x { }\nextra x { a }";
        assert!(matches!(parse_document(src).unwrap_err(), DomlError::Duplicate { line: 2, .. }));
    }

    #[test]
    fn unknown_blocks_kept_verbatim() {
        let src = "application app {\n  component c { x \"y\" }\n}\n";
        let doc = parse_document(src).unwrap();
        match &doc.blocks[0] {
            Block::Other(raw) => {
                assert_eq!(raw.keyword, "application");
                assert_eq!(raw.name.as_deref(), Some("app"));
                assert_eq!(raw.text, "application app {\n  component c { x \"y\" }\n}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unresolved_subnet_reference() {
        let src = "infrastructure i {\n vm a {\n iface e { belongs_to nowhere }\n }\n}";
        let err = parse_document(src).unwrap_err();
        assert!(matches!(err, DomlError::Unresolved { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn autoscale_bounds_checked() {
        let src = "infrastructure i { autoscale_group g { vm v { os \"x\" } min 3 max 1 } }";
        assert!(matches!(parse_document(src).unwrap_err(), DomlError::Syntax { .. }));
    }

    #[test]
    fn unexpected_eof_position() {
        let src = "optimization o {\n  objectives {";
        let err = parse_document(src).unwrap_err();
        assert_eq!(err.position(), (2, 15));
    }

    #[test]
    fn parses_solution_block() {
        let src = r#"optimization o {
  objectives { "cost" => min }
  solution sol1 {
    objectives {
      cost 230.53 euro
    }
    decisions ["StandardStorage1_Europe", "t2.nano"]
  }
}"#;
        let spec = parse_optimization_layer(src).unwrap();
        assert_eq!(spec.solutions.len(), 1);
        let sol = &spec.solutions[0];
        assert_eq!(sol.objective_values[0].value, 230.53);
        assert_eq!(sol.objective_values[0].unit, "euro");
        assert_eq!(sol.decisions, vec!["StandardStorage1_Europe", "t2.nano"]);
    }
}
