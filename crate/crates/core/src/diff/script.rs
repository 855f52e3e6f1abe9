use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Replace,
    Insert,
    Delete,
}

impl EditKind {
    pub const ALL: [EditKind; 3] = [EditKind::Replace, EditKind::Insert, EditKind::Delete];

    pub fn name(self) -> &'static str {
        match self {
            EditKind::Replace => "replace",
            EditKind::Insert => "insert",
            EditKind::Delete => "delete",
        }
    }

    /// The kind seen when the two sequences swap roles.
    pub fn mirrored(self) -> EditKind {
        match self {
            EditKind::Replace => EditKind::Replace,
            EditKind::Insert => EditKind::Delete,
            EditKind::Delete => EditKind::Insert,
        }
    }
}

/// One unit-cost token edit.
///
/// `position` indexes the predicted sequence: the replaced or deleted token,
/// or for an insert the token the new one goes in front of.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEdit {
    pub kind: EditKind,
    pub position: usize,
    pub removed: Option<String>,
    pub added: Option<String>,
}

/// A maximal run of same-kind edits at consecutive predicted positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditSegment {
    pub kind: EditKind,
    pub position: usize,
    pub removed: Vec<String>,
    pub added: Vec<String>,
}

impl EditSegment {
    pub fn tokens(&self) -> impl Iterator<Item = &String> {
        self.removed.iter().chain(&self.added)
    }

    /// True if the segment edits exactly one token.
    pub fn is_single_token(&self) -> bool {
        match self.kind {
            EditKind::Replace => self.removed.len() == 1 && self.added.len() == 1,
            EditKind::Insert => self.added.len() == 1,
            EditKind::Delete => self.removed.len() == 1,
        }
    }
}

// Last-step states of the alignment DP.
const MATCH: usize = 0;
const REPLACE: usize = 1;
const DELETE: usize = 2;
const INSERT: usize = 3;

type Cost = (u32, u32);

/// Minimum-cost token edit script turning `pred` into `gold`.
///
/// Costs are unit. Among minimum-cost scripts the one with the fewest edit
/// segments is chosen, so the segment count does not depend on which side
/// is called "predicted". Remaining ties prefer replace, then delete, then
/// insert.
pub fn token_edit_script<S: AsRef<str>>(pred: &[S], gold: &[S]) -> Vec<TokenEdit> {
    let n = pred.len();
    let m = gold.len();
    let width = m + 1;
    let idx = |i: usize, j: usize| i * width + j;
    let mut best: Vec<[Option<Cost>; 4]> = vec![[None; 4]; (n + 1) * width];
    best[idx(0, 0)][MATCH] = Some((0, 0));

    let pick = |cell: &[Option<Cost>; 4], kind: usize| -> Option<(Cost, usize)> {
        let mut chosen: Option<(Cost, usize)> = None;
        for prev in [MATCH, REPLACE, DELETE, INSERT] {
            if let Some((edits, segs)) = cell[prev] {
                let cost = if kind == MATCH {
                    (edits, segs)
                } else {
                    (edits + 1, segs + u32::from(prev != kind))
                };
                if chosen.is_none_or(|(c, _)| cost < c) {
                    chosen = Some((cost, prev));
                }
            }
        }
        chosen
    };

    for i in 0..=n {
        for j in 0..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let mut cell = [None; 4];
            if i > 0 && j > 0 {
                let diag = best[idx(i - 1, j - 1)];
                if pred[i - 1].as_ref() == gold[j - 1].as_ref() {
                    cell[MATCH] = pick(&diag, MATCH).map(|(c, _)| c);
                } else {
                    cell[REPLACE] = pick(&diag, REPLACE).map(|(c, _)| c);
                }
            }
            if i > 0 {
                cell[DELETE] = pick(&best[idx(i - 1, j)], DELETE).map(|(c, _)| c);
            }
            if j > 0 {
                cell[INSERT] = pick(&best[idx(i, j - 1)], INSERT).map(|(c, _)| c);
            }
            best[idx(i, j)] = cell;
        }
    }

    // Backtrace from the best final state.
    let mut state = [MATCH, REPLACE, DELETE, INSERT]
        .into_iter()
        .filter_map(|k| best[idx(n, m)][k].map(|c| (c, k)))
        .min_by(|a, b| a.0.cmp(&b.0))
        .map(|(_, k)| k)
        .unwrap_or(MATCH);
    let (mut i, mut j) = (n, m);
    let mut edits = Vec::new();
    while i > 0 || j > 0 {
        let (pi, pj) = match state {
            MATCH | REPLACE => (i - 1, j - 1),
            DELETE => (i - 1, j),
            _ => (i, j - 1),
        };
        let prev = pick(&best[idx(pi, pj)], state)
            .map(|(_, p)| p)
            .expect("reachable state has a predecessor");
        match state {
            REPLACE => edits.push(TokenEdit {
                kind: EditKind::Replace,
                position: i - 1,
                removed: Some(pred[i - 1].as_ref().to_string()),
                added: Some(gold[j - 1].as_ref().to_string()),
            }),
            DELETE => edits.push(TokenEdit {
                kind: EditKind::Delete,
                position: i - 1,
                removed: Some(pred[i - 1].as_ref().to_string()),
                added: None,
            }),
            INSERT => edits.push(TokenEdit {
                kind: EditKind::Insert,
                position: i,
                removed: None,
                added: Some(gold[j - 1].as_ref().to_string()),
            }),
            _ => {}
        }
        i = pi;
        j = pj;
        state = prev;
    }
    edits.reverse();
    edits
}

/// Fuses script-consecutive edits of the same kind at consecutive predicted
/// positions into segments.
pub fn merge_segments(script: &[TokenEdit]) -> Vec<EditSegment> {
    let mut segments: Vec<EditSegment> = Vec::new();
    for e in script {
        if let Some(last) = segments.last_mut() {
            let contiguous = match e.kind {
                EditKind::Insert => e.position == last.position,
                _ => e.position == last.position + last.removed.len(),
            };
            if last.kind == e.kind && contiguous {
                last.removed.extend(e.removed.clone());
                last.added.extend(e.added.clone());
                continue;
            }
        }
        segments.push(EditSegment {
            kind: e.kind,
            position: e.position,
            removed: e.removed.iter().cloned().collect(),
            added: e.added.iter().cloned().collect(),
        });
    }
    segments
}

/// Applies a script to `pred`; used to check scripts are well-formed.
pub fn apply_script<S: AsRef<str>>(pred: &[S], script: &[TokenEdit]) -> Vec<String> {
    let mut out = Vec::new();
    let mut edits = script.iter().peekable();
    for i in 0..=pred.len() {
        let mut consumed = false;
        while let Some(e) = edits.next_if(|e| e.position == i) {
            match e.kind {
                EditKind::Insert => out.push(e.added.clone().expect("insert adds")),
                EditKind::Replace => {
                    out.push(e.added.clone().expect("replace adds"));
                    consumed = true;
                }
                EditKind::Delete => consumed = true,
            }
            if consumed {
                break;
            }
        }
        if i < pred.len() && !consumed {
            out.push(pred[i].as_ref().to_string());
        }
    }
    out
}
