/**
 * Client-side rule tree: the block model the editor renders and mutates.
 *
 * The model deliberately stays one-to-one with the service's ruleset JSON so
 * parse/serialize is lossless; canonical forms reproduce the service's
 * clause identity strings (the wire currency for lock and ban).
 */

import type {
  AtomKind,
  ClauseJson,
  ClauseStatus,
  LiteralJson,
  RuleEditJson,
  RuleJson,
  RulesetJson,
} from "./api.js";

export interface LiteralBlock {
  kind: AtomKind;
  args: (string | number)[];
  negated: boolean;
}

export interface ClauseBlock {
  literals: LiteralBlock[];
  status: ClauseStatus;
  impure: boolean;
}

export interface RuleBlock {
  className: string;
  clauses: ClauseBlock[];
}

export interface RuleBlockModel {
  generation: number;
  rules: RuleBlock[];
  banned: Record<string, string[]>;
}

export function atomCanonical(kind: AtomKind, args: (string | number)[]): string {
  switch (kind) {
    case "count_at_least":
      return `count(${args[0]})>=${args[1]}`;
    case "overlaps":
      return `overlaps(${args[0]},${args[1]})`;
    case "has_attribute":
      return `attr(${args[0]})`;
  }
}

export function literalCanonical(lit: LiteralBlock): string {
  return (lit.negated ? "not " : "") + atomCanonical(lit.kind, lit.args);
}

/**
 * Order- and duplicate-insensitive clause identity, matching the service:
 * unique (atom, negated) pairs sorted by atom string then polarity.
 */
export function clauseCanonical(literals: LiteralBlock[]): string {
  const seen = new Map<string, { canon: string; negated: boolean }>();
  for (const lit of literals) {
    const canon = atomCanonical(lit.kind, lit.args);
    seen.set(`${lit.negated ? 1 : 0}|${canon}`, { canon, negated: lit.negated });
  }
  const keys = [...seen.values()].sort((a, b) => {
    if (a.canon !== b.canon) return a.canon < b.canon ? -1 : 1;
    return Number(a.negated) - Number(b.negated);
  });
  return keys.map((k) => (k.negated ? "not " : "") + k.canon).join(" & ");
}

export function parseRuleset(doc: RulesetJson): RuleBlockModel {
  return {
    generation: doc.generation,
    rules: doc.rules.map((r) => ({
      className: r.class,
      clauses: r.clauses.map(parseClause),
    })),
    banned: Object.fromEntries(
      Object.entries(doc.banned ?? {}).map(([cls, forms]) => [cls, [...forms]]),
    ),
  };
}

function parseClause(c: ClauseJson): ClauseBlock {
  return {
    literals: c.literals.map((l) => ({ kind: l.kind, args: [...l.args], negated: l.negated })),
    status: c.status,
    impure: c.impure,
  };
}

export function serializeRuleset(model: RuleBlockModel): RulesetJson {
  return {
    generation: model.generation,
    rules: model.rules.map(serializeRule),
    banned: Object.fromEntries(
      Object.entries(model.banned)
        .filter(([, forms]) => forms.length > 0)
        .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
        .map(([cls, forms]) => [cls, [...forms].sort()]),
    ),
  };
}

export function serializeRule(rule: RuleBlock): RuleJson {
  return {
    class: rule.className,
    clauses: rule.clauses.map((c) => ({
      literals: c.literals.map(
        (l): LiteralJson => ({ kind: l.kind, args: [...l.args], negated: l.negated }),
      ),
      status: c.status,
      impure: c.impure,
    })),
  };
}

/**
 * Semantic equality: same generation and ban registry, same classes in
 * order, and clause-for-clause matching canonical form, status, and purity.
 * Literal order inside a clause is immaterial by construction.
 */
export function rulesetsEquivalent(a: RuleBlockModel, b: RuleBlockModel): boolean {
  if (a.generation !== b.generation) return false;
  if (a.rules.length !== b.rules.length) return false;
  for (let i = 0; i < a.rules.length; i++) {
    const ra = a.rules[i]!;
    const rb = b.rules[i]!;
    if (ra.className !== rb.className || ra.clauses.length !== rb.clauses.length) return false;
    for (let j = 0; j < ra.clauses.length; j++) {
      const ca = ra.clauses[j]!;
      const cb = rb.clauses[j]!;
      if (
        clauseCanonical(ca.literals) !== clauseCanonical(cb.literals) ||
        ca.status !== cb.status ||
        ca.impure !== cb.impure
      ) {
        return false;
      }
    }
  }
  const bannedKeys = (m: RuleBlockModel) =>
    Object.keys(m.banned)
      .filter((cls) => m.banned[cls]!.length > 0)
      .sort();
  const ka = bannedKeys(a);
  const kb = bannedKeys(b);
  if (ka.length !== kb.length) return false;
  for (let i = 0; i < ka.length; i++) {
    if (ka[i] !== kb[i]) return false;
    const fa = [...a.banned[ka[i]!]!].sort();
    const fb = [...b.banned[kb[i]!]!].sort();
    if (fa.length !== fb.length || fa.some((f, n) => f !== fb[n])) return false;
  }
  return true;
}

export class LocalEditError extends Error {}

function literalKey(lit: LiteralBlock): string {
  return `${lit.negated ? 1 : 0}|${atomCanonical(lit.kind, lit.args)}`;
}

/**
 * Mirror of the service's edit semantics, used for optimistic updates: the
 * editor applies the edit locally, sends it, and reconciles (or reverts) on
 * the response. Throws LocalEditError for edits the service would reject,
 * so obviously-invalid interactions never leave the client.
 */
export function applyEditLocally(model: RuleBlockModel, edit: RuleEditJson): RuleBlockModel {
  const next: RuleBlockModel = {
    generation: model.generation,
    rules: model.rules.map((r) => ({
      className: r.className,
      clauses: r.clauses.map((c) => ({
        literals: c.literals.map((l) => ({ ...l, args: [...l.args] })),
        status: c.status,
        impure: c.impure,
      })),
    })),
    banned: Object.fromEntries(Object.entries(model.banned).map(([k, v]) => [k, [...v]])),
  };
  const rule = next.rules.find((r) => r.className === edit.class);
  if (!rule) throw new LocalEditError(`no rule for class ${edit.class}`);

  const clauseAt = (index: number): ClauseBlock => {
    const clause = rule.clauses[index];
    if (!clause) throw new LocalEditError(`no clause ${index} in ${edit.class}`);
    return clause;
  };
  const requireEditable = (clause: ClauseBlock) => {
    if (clause.status === "locked") {
      throw new LocalEditError("cannot edit a locked clause; unlock it first");
    }
    if (clause.status === "banned") {
      throw new LocalEditError("cannot edit a banned clause; unban it first");
    }
  };
  const checkNewForm = (literals: LiteralBlock[], skipIndex?: number) => {
    const form = clauseCanonical(literals);
    rule.clauses.forEach((c, i) => {
      if (i !== skipIndex && clauseCanonical(c.literals) === form) {
        throw new LocalEditError(`duplicate clause: ${form}`);
      }
    });
    if ((next.banned[edit.class] ?? []).includes(form)) {
      throw new LocalEditError(`clause is banned; unban it first: ${form}`);
    }
  };

  switch (edit.op) {
    case "add_clause": {
      const clause = parseClause({ ...edit.clause, status: "normal", impure: false });
      checkNewForm(clause.literals);
      rule.clauses.push(clause);
      break;
    }
    case "add_literal": {
      const clause = clauseAt(edit.clause_index);
      requireEditable(clause);
      const incoming = { ...edit.literal, args: [...edit.literal.args] };
      if (clause.literals.some((l) => literalKey(l) === literalKey(incoming))) {
        throw new LocalEditError("that predicate is already in the clause");
      }
      checkNewForm([...clause.literals, incoming], edit.clause_index);
      clause.literals.push(incoming);
      break;
    }
    case "edit_literal": {
      const clause = clauseAt(edit.clause_index);
      requireEditable(clause);
      if (!clause.literals[edit.literal_index]) {
        throw new LocalEditError(`no literal ${edit.literal_index}`);
      }
      const updated = clause.literals.map((l, i) =>
        i === edit.literal_index ? { ...edit.literal, args: [...edit.literal.args] } : l,
      );
      if (new Set(updated.map(literalKey)).size !== updated.length) {
        throw new LocalEditError("edit would duplicate a predicate in the clause");
      }
      checkNewForm(updated, edit.clause_index);
      clause.literals = updated;
      break;
    }
    case "remove_literal": {
      const clause = clauseAt(edit.clause_index);
      requireEditable(clause);
      if (!clause.literals[edit.literal_index]) {
        throw new LocalEditError(`no literal ${edit.literal_index}`);
      }
      if (clause.literals.length === 1) {
        throw new LocalEditError("a clause must contain at least one predicate");
      }
      const remaining = clause.literals.filter((_, i) => i !== edit.literal_index);
      checkNewForm(remaining, edit.clause_index);
      clause.literals = remaining;
      break;
    }
    case "remove_clause": {
      const clause = clauseAt(edit.clause_index);
      if (clause.status === "locked") {
        throw new LocalEditError("cannot remove a locked clause; unlock it first");
      }
      rule.clauses.splice(edit.clause_index, 1);
      break;
    }
    case "lock": {
      const clause = clauseAt(edit.clause_index);
      if (clause.status === "banned") throw new LocalEditError("cannot lock a banned clause");
      clause.status = "locked";
      break;
    }
    case "unlock": {
      const clause = clauseAt(edit.clause_index);
      if (clause.status === "banned") throw new LocalEditError("clause is banned, not locked");
      clause.status = "normal";
      break;
    }
    case "ban": {
      const clause = clauseAt(edit.clause_index);
      if (clause.status === "locked") {
        throw new LocalEditError("cannot ban a locked clause; unlock it first");
      }
      clause.status = "banned";
      const forms = next.banned[edit.class] ?? [];
      const form = clauseCanonical(clause.literals);
      if (!forms.includes(form)) forms.push(form);
      next.banned[edit.class] = forms.sort();
      break;
    }
    case "unban": {
      const forms = next.banned[edit.class] ?? [];
      const at = forms.indexOf(edit.canonical_form);
      if (at < 0) {
        throw new LocalEditError(`form is not banned for ${edit.class}: ${edit.canonical_form}`);
      }
      forms.splice(at, 1);
      if (forms.length === 0) delete next.banned[edit.class];
      else next.banned[edit.class] = forms;
      for (const clause of rule.clauses) {
        if (
          clause.status === "banned" &&
          clauseCanonical(clause.literals) === edit.canonical_form
        ) {
          clause.status = "normal";
        }
      }
      break;
    }
    case "replace_rule": {
      if (edit.rule.class !== edit.class) {
        throw new LocalEditError("replacement rule names a different class");
      }
      const parsed = parseRuleset({ generation: 0, rules: [edit.rule], banned: {} });
      rule.clauses = parsed.rules[0]!.clauses;
      break;
    }
  }
  return next;
}
