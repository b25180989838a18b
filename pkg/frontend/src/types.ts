// Wire types, shaped exactly like the server's JSON. Integers wider than
// 2^53-1 arrive as strings, so every numeric slot is number | string.

export type Wire = number | string;

export type Status = "open" | "fixed" | "forced_in" | "forced_out";

export interface VarView {
  name: string;
  domain: [Wire, Wire][];
  status: Status;
  value: Wire | null;
}

export interface View {
  vars: VarView[];
  remaining: Wire;
  exact: boolean;
}

export interface Delta {
  changed: VarView[];
}

export type Restriction =
  | { kind: "fix"; value: Wire }
  | { kind: "at_least"; value: Wire }
  | { kind: "at_most"; value: Wire };

export type LogEntry =
  | { kind: "decide"; name: string; restriction: Restriction }
  | { kind: "constraint"; expr: string };

export interface AttributeSummary {
  name: string;
  domain: { values: Wire[] } | { range: [Wire, Wire] };
}

export interface FeatureSummary {
  name: string;
  max_count: number;
  parent: string | null;
  edge: string | null;
  attributes: AttributeSummary[];
}

export interface GroupSummary {
  parent: string;
  lo: number;
  hi: number;
  members: string[];
}

export interface CrossDepSummary {
  kind: string;
  source: string;
  target: string;
  scope: string;
  offset: number;
}

export interface GoalSummary {
  name: string;
  direction: "minimize" | "maximize";
  expr: string;
}

export interface ModelSummary {
  model_id: string;
  name: string;
  features: FeatureSummary[];
  enums: { name: string; codes: string[] }[];
  groups: GroupSummary[];
  cross_deps: CrossDepSummary[];
  constraints: string[];
  goals: GoalSummary[];
}

export interface Diagnostic {
  code: string;
  message: string;
  span: { line: number; column: number } | null;
}

export interface UploadResult {
  model_id: string | null;
  diagnostics: Diagnostic[];
}

export type Solution = Record<string, Wire>;

export interface OptimizeResult {
  goal: string;
  value: Wire | null;
  solution: Solution | null;
  proven: boolean;
}

export interface ConflictInfo {
  message: string;
  culprit: string | null;
  variable: string | null;
  action: string | null;
}
