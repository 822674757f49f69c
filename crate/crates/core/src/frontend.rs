//! Reader for `.oobc` program text.

use std::collections::BTreeSet;

use crate::class_table::ClassTable;
use crate::error::{FrontendError, SyntaxError};
use crate::sexp::{read_all, Pos, Sexp};
use crate::syntax::*;

type Result<T> = std::result::Result<T, FrontendError>;

fn err<T>(pos: Pos, msg: impl Into<String>) -> Result<T> {
    Err(SyntaxError::new(pos, msg).into())
}

/// Parses and validates a program. The returned program satisfies every
/// structural invariant checked by [`ClassTable::new`].
pub fn parse_program(text: &str) -> Result<Program> {
    let program = parse_unchecked(text)?;
    ClassTable::new(&program)?;
    Ok(program)
}

/// Parses program text without the semantic checks.
pub fn parse_unchecked(text: &str) -> Result<Program> {
    let forms = read_all(text)?;
    let classes = forms.iter().map(parse_class).collect::<Result<Vec<_>>>()?;
    Ok(Program { classes })
}

fn atom<'a>(s: &'a Sexp, what: &str) -> Result<&'a str> {
    match s {
        Sexp::Atom(a, _) => Ok(a),
        other => err(other.pos(), format!("expected {what}, found `{other}`")),
    }
}

fn list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp]> {
    match s {
        Sexp::List(items, _) => Ok(items),
        other => err(other.pos(), format!("expected {what}, found `{other}`")),
    }
}

/// Splits leading attribute keywords off a form.
fn take_attributes(items: &[Sexp]) -> (BTreeSet<Attribute>, &[Sexp]) {
    let mut set = BTreeSet::new();
    let mut i = 0;
    while let Some(a) = items.get(i).and_then(Sexp::as_atom).and_then(Attribute::parse) {
        set.insert(a);
        i += 1;
    }
    (set, &items[i..])
}

fn parse_class(form: &Sexp) -> Result<ClassDef> {
    let pos = form.pos();
    let items = list(form, "a class definition")?;
    let (attributes, rest) = take_attributes(items);
    match rest {
        [kw, name, ext, sup, fields, methods] if kw.is_atom("class") && ext.is_atom("extends") => {
            let fields = list(fields, "a field list")?
                .iter()
                .map(parse_field)
                .collect::<Result<Vec<_>>>()?;
            let methods = list(methods, "a method list")?
                .iter()
                .map(parse_method)
                .collect::<Result<Vec<_>>>()?;
            Ok(ClassDef {
                attributes,
                name: atom(name, "a class name")?.to_string(),
                superclass: atom(sup, "a superclass name")?.to_string(),
                fields,
                methods,
                loc: Loc(pos),
            })
        }
        _ => err(
            pos,
            "expected (attribute ... class NAME extends NAME (field ...) (method ...))",
        ),
    }
}

fn parse_field(form: &Sexp) -> Result<FieldDef> {
    let pos = form.pos();
    let items = list(form, "a field definition")?;
    if !items.first().is_some_and(|h| h.is_atom("field")) {
        return err(pos, "expected (field attribute ... NAME TYPE)");
    }
    let (attributes, rest) = take_attributes(&items[1..]);
    match rest {
        [name, ty] => Ok(FieldDef {
            attributes,
            name: atom(name, "a field name")?.to_string(),
            ty: Type::parse(atom(ty, "a type")?),
            loc: Loc(pos),
        }),
        _ => err(pos, "expected (field attribute ... NAME TYPE)"),
    }
}

fn parse_types(form: &Sexp) -> Result<Vec<Type>> {
    list(form, "a type list")?
        .iter()
        .map(|t| atom(t, "a type").map(Type::parse))
        .collect()
}

fn parse_method(form: &Sexp) -> Result<MethodDef> {
    let pos = form.pos();
    let items = list(form, "a method definition")?;
    if !items.first().is_some_and(|h| h.is_atom("method")) {
        return err(pos, "expected (method attribute ... NAME (TYPE ...) TYPE ...)");
    }
    let (attributes, rest) = take_attributes(&items[1..]);
    let [name, params, ret, throws, limit, body @ ..] = rest else {
        return err(
            pos,
            "expected (method attribute ... NAME (TYPE ...) TYPE (throws ...) (limit N) STMT ...)",
        );
    };
    let throws_items = list(throws, "(throws ...)")?;
    if !throws_items.first().is_some_and(|h| h.is_atom("throws")) {
        return err(throws.pos(), "expected (throws CLASS ...)");
    }
    let throws = throws_items[1..]
        .iter()
        .map(|t| atom(t, "a class name").map(str::to_string))
        .collect::<Result<Vec<_>>>()?;
    let limit = match list(limit, "(limit N)")? {
        [kw, n] if kw.is_atom("limit") => atom(n, "a register count")?
            .parse::<u32>()
            .map_err(|_| SyntaxError::new(n.pos(), "limit must be a non-negative integer"))?,
        _ => return err(limit.pos(), "expected (limit N)"),
    };
    let mut stmts = Vec::with_capacity(body.len());
    let mut locs = Vec::with_capacity(body.len());
    for s in body {
        stmts.push(parse_stmt(s)?);
        locs.push(Loc(s.pos()));
    }
    Ok(MethodDef {
        attributes,
        name: atom(name, "a method name")?.to_string(),
        params: parse_types(params)?,
        ret: Type::parse(atom(ret, "a return type")?),
        throws,
        limit,
        body: stmts,
        locs,
        loc: Loc(pos),
    })
}

fn parse_stmt(form: &Sexp) -> Result<Stmt> {
    let pos = form.pos();
    let items = list(form, "a statement")?;
    let Some(head) = items.first().and_then(Sexp::as_atom) else {
        return err(pos, "statement must start with a keyword");
    };
    let args = &items[1..];
    let name = |s: &Sexp| atom(s, "a name").map(str::to_string);
    let arity = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            err(pos, format!("`{head}` takes {n} operand(s), found {}", args.len()))
        }
    };
    Ok(match head {
        "label" => {
            arity(1)?;
            Stmt::Label(name(&args[0])?)
        }
        "nop" => {
            arity(0)?;
            Stmt::Nop
        }
        "line" => {
            arity(1)?;
            let n = atom(&args[0], "a line number")?;
            Stmt::Line(
                n.parse()
                    .map_err(|_| SyntaxError::new(args[0].pos(), "line expects an integer"))?,
            )
        }
        "goto" => {
            arity(1)?;
            Stmt::Goto(name(&args[0])?)
        }
        "if" => {
            arity(2)?;
            let target = match list(&args[1], "(goto LABEL)")? {
                [kw, l] if kw.is_atom("goto") => name(l)?,
                _ => return err(args[1].pos(), "expected (goto LABEL)"),
            };
            Stmt::If(parse_aexp(&args[0])?, target)
        }
        "assign" => {
            arity(2)?;
            let rhs = match args[1].head() {
                Some("new") => match list(&args[1], "(new CLASS)")? {
                    [_, c] => Rhs::New(name(c)?),
                    _ => return err(args[1].pos(), "expected (new CLASS)"),
                },
                Some(h) if InvokeKind::parse(h).is_some() => Rhs::Invoke(parse_invoke(&args[1])?),
                _ => Rhs::Atomic(parse_aexp(&args[1])?),
            };
            Stmt::Assign(name(&args[0])?, rhs)
        }
        "return" => {
            arity(1)?;
            Stmt::Return(parse_aexp(&args[0])?)
        }
        "field-put" => {
            arity(3)?;
            Stmt::FieldPut(parse_aexp(&args[0])?, name(&args[1])?, parse_aexp(&args[2])?)
        }
        "field-get" => {
            arity(3)?;
            Stmt::FieldGet(name(&args[0])?, parse_aexp(&args[1])?, name(&args[2])?)
        }
        "const-string" => {
            arity(2)?;
            match &args[1] {
                Sexp::Str(s, _) => Stmt::ConstString(name(&args[0])?, s.clone()),
                other => return err(other.pos(), "const-string expects a string literal"),
            }
        }
        h if InvokeKind::parse(h).is_some() => Stmt::Invoke(parse_invoke(form)?),
        other => return err(pos, format!("unknown statement `{other}`")),
    })
}

fn parse_invoke(form: &Sexp) -> Result<Invoke> {
    let pos = form.pos();
    let items = list(form, "an invocation")?;
    let kind = items
        .first()
        .and_then(Sexp::as_atom)
        .and_then(InvokeKind::parse)
        .ok_or_else(|| SyntaxError::new(pos, "expected an invoke kind"))?;
    let (target, args, types) = match &items[1..] {
        [t, a] => (t, a, None),
        [t, a, ty] => (t, a, Some(ty)),
        _ => return err(pos, "expected (invoke-kind CLASS/METHOD (ARG ...) (TYPE ...))"),
    };
    let target = atom(target, "a qualified method name")?;
    let Some((class, method)) = target.rsplit_once('/') else {
        return err(form.pos(), format!("`{target}` is not a qualified CLASS/METHOD name"));
    };
    if class.is_empty() || method.is_empty() {
        return err(form.pos(), format!("`{target}` is not a qualified CLASS/METHOD name"));
    }
    let args = list(args, "an argument list")?
        .iter()
        .map(parse_aexp)
        .collect::<Result<Vec<_>>>()?;
    let types = match types {
        Some(t) => parse_types(t)?,
        None => Vec::new(),
    };
    Ok(Invoke {
        kind,
        class: class.to_string(),
        method: method.to_string(),
        args,
        types,
    })
}

fn parse_aexp(form: &Sexp) -> Result<AExp> {
    match form {
        Sexp::Atom(a, pos) => Ok(match a.as_str() {
            "this" => AExp::This,
            "true" => AExp::True,
            "false" => AExp::False,
            "null" => AExp::Null,
            "void" => AExp::Void,
            s if s.starts_with(|c: char| c.is_ascii_digit() || c == '-') => {
                match s.parse::<i64>() {
                    Ok(n) => AExp::Int(n),
                    Err(_) => return err(*pos, format!("bad integer literal `{s}`")),
                }
            }
            s => AExp::Reg(s.to_string()),
        }),
        Sexp::Str(_, pos) => err(*pos, "string literals are only allowed in const-string"),
        Sexp::List(items, pos) => {
            let Some(head) = items.first().and_then(Sexp::as_atom) else {
                return err(*pos, "expected an operator");
            };
            if head == "instance-of" {
                return match &items[1..] {
                    [e, c] => Ok(AExp::InstanceOf(
                        Box::new(parse_aexp(e)?),
                        atom(c, "a class name")?.to_string(),
                    )),
                    _ => err(*pos, "expected (instance-of AEXP CLASS)"),
                };
            }
            let Some(op) = AtomicOp::parse(head) else {
                return err(*pos, format!("unknown atomic operator `{head}`"));
            };
            let args = items[1..].iter().map(parse_aexp).collect::<Result<Vec<_>>>()?;
            if args.len() != op.arity() {
                return err(
                    *pos,
                    format!("`{head}` takes {} operand(s), found {}", op.arity(), args.len()),
                );
            }
            Ok(AExp::Op(op, args))
        }
    }
}
