#pragma once

// Joint tagging/parsing transition system: configurations, the five action
// kinds, legality conditions, the static oracle, and projectivity utilities.
// Everything here is model-free and operates on plain integer ids.

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace jointparse {

struct TransitionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unlabeled marker for an arc awaiting its Label action.
constexpr int kUnlabeled = -1;

struct DepArc {
    int head = 0;      // 1-based word index
    int modifier = 0;  // 1-based word index
    int label = kUnlabeled;

    bool operator==(const DepArc& o) const {
        return head == o.head && modifier == o.modifier && label == o.label;
    }
};

struct DepTree {
    int n_words = 0;
    std::vector<DepArc> arcs;
};

// Gold annotation for one sentence, already mapped to dense ids.
// heads[i] is the head of word i+1, with 0 marking the root word.
// labels[i] is the label of the incoming arc of word i+1 (ignored for the
// root word, which has no incoming arc).
struct GoldParse {
    std::vector<int> tags;
    std::vector<int> heads;
    std::vector<int> labels;

    int size() const { return static_cast<int>(heads.size()); }
};

enum class ActionType { Shift, Left, Right, Tag, Label };

struct Action {
    ActionType type = ActionType::Shift;
    int arg = -1;  // tag id for Tag, label id for Label, unused otherwise

    bool operator==(const Action& o) const {
        return type == o.type && arg == o.arg;
    }
};

inline Action shift_action() { return {ActionType::Shift, -1}; }
inline Action left_action() { return {ActionType::Left, -1}; }
inline Action right_action() { return {ActionType::Right, -1}; }
inline Action tag_action(int tag) { return {ActionType::Tag, tag}; }
inline Action label_action(int label) { return {ActionType::Label, label}; }

inline std::string to_string(const Action& a) {
    switch (a.type) {
        case ActionType::Shift: return "Shift";
        case ActionType::Left: return "Left";
        case ActionType::Right: return "Right";
        case ActionType::Tag: return "Tag(" + std::to_string(a.arg) + ")";
        case ActionType::Label: return "Label(" + std::to_string(a.arg) + ")";
    }
    return "?";
}

// Machine state <S, B, T, D>. The buffer is always the suffix
// [buffer_start .. n_words] of the sentence, so it is stored as one index.
struct Configuration {
    int n_words = 0;
    std::vector<int> stack;    // word indices, top = back
    int buffer_start = 1;      // index of B_0; > n_words means empty buffer
    std::vector<int> tags;     // tag ids in shift order
    std::vector<DepArc> arcs;  // creation order, back = most recent

    explicit Configuration(int n) : n_words(n) {
        if (n < 1) throw TransitionError("sentence must have at least 1 word");
        stack.reserve(n);
        tags.reserve(n);
        arcs.reserve(n > 0 ? n - 1 : 0);
    }

    int stack_size() const { return static_cast<int>(stack.size()); }
    int buffer_size() const { return n_words - buffer_start + 1; }
    int tagged_count() const { return static_cast<int>(tags.size()); }

    // i-th stack item counted from the top: stack_at(0) = S0.
    // Returns 0 when the stack is not that deep.
    int stack_at(int i) const {
        const int s = stack_size();
        return i < s ? stack[s - 1 - i] : 0;
    }

    // Front of the buffer, or 0 when empty.
    int buffer_front() const {
        return buffer_start <= n_words ? buffer_start : 0;
    }

    bool last_arc_unlabeled() const {
        return !arcs.empty() && arcs.back().label == kUnlabeled;
    }
};

enum class ClassifierKind { Structural, Tagging, Labeling };

inline bool is_terminal(const Configuration& c) {
    return c.stack_size() == 1 && c.buffer_size() == 0 &&
           c.tagged_count() == c.n_words && !c.last_arc_unlabeled();
}

// Which of the three classifiers decides the next action. The conditions are
// mutually exclusive on configurations reachable from the initial one.
inline ClassifierKind classifier_kind(const Configuration& c) {
    if (is_terminal(c)) throw TransitionError("no pending decision: configuration is terminal");
    if (c.tagged_count() == c.n_words - c.buffer_size() - 1) return ClassifierKind::Tagging;
    if (c.last_arc_unlabeled()) return ClassifierKind::Labeling;
    return ClassifierKind::Structural;
}

namespace detail {

// Returns the name of the first violated legality condition, or nullptr if
// the action is legal.
inline const char* violated_condition(const Configuration& c, const Action& a) {
    const bool all_removed_tagged = c.tagged_count() == c.n_words - c.buffer_size();
    switch (a.type) {
        case ActionType::Shift:
            if (c.buffer_size() <= 0) return "Shift requires |B| > 0";
            if (!all_removed_tagged) return "Shift requires |T| = N - |B|";
            if (c.last_arc_unlabeled()) return "Shift requires D[-1].l != bot";
            return nullptr;
        case ActionType::Left:
        case ActionType::Right:
            if (c.stack_size() <= 1) return "Left/Right require |S| > 1";
            if (!all_removed_tagged) return "Left/Right require |T| = N - |B|";
            if (c.last_arc_unlabeled()) return "Left/Right require D[-1].l != bot";
            return nullptr;
        case ActionType::Tag:
            if (c.tagged_count() != c.n_words - c.buffer_size() - 1)
                return "Tag requires |T| = N - |B| - 1";
            return nullptr;
        case ActionType::Label:
            if (!c.last_arc_unlabeled()) return "Label requires D[-1].l = bot";
            return nullptr;
    }
    return "unknown action";
}

}  // namespace detail

inline bool is_legal(const Configuration& c, const Action& a) {
    return detail::violated_condition(c, a) == nullptr;
}

// All actions whose condition holds in c. Empty iff c is terminal.
inline std::vector<Action> legal_actions(const Configuration& c, int n_tags, int n_labels) {
    std::vector<Action> out;
    if (is_legal(c, shift_action())) out.push_back(shift_action());
    if (is_legal(c, left_action())) {
        out.push_back(left_action());
        out.push_back(right_action());
    }
    if (is_legal(c, tag_action(0))) {
        for (int t = 0; t < n_tags; ++t) out.push_back(tag_action(t));
    }
    if (is_legal(c, label_action(0))) {
        for (int l = 0; l < n_labels; ++l) out.push_back(label_action(l));
    }
    return out;
}

// Applies one of the five rewrite rules. The input is taken by value; the
// caller's configuration is never mutated.
inline Configuration apply_action(Configuration c, const Action& a) {
    if (const char* cond = detail::violated_condition(c, a)) {
        throw TransitionError(std::string("illegal action ") + to_string(a) + ": " + cond);
    }
    switch (a.type) {
        case ActionType::Shift:
            c.stack.push_back(c.buffer_start);
            ++c.buffer_start;
            break;
        case ActionType::Left: {
            // <...|x_m|x_h>  =>  <...|x_h>, arc <h, m, bot>
            const int h = c.stack.back();
            const int m = c.stack[c.stack.size() - 2];
            c.stack.pop_back();
            c.stack.back() = h;
            c.arcs.push_back({h, m, kUnlabeled});
            break;
        }
        case ActionType::Right: {
            // <...|x_h|x_m>  =>  <...|x_h>, arc <h, m, bot>
            const int m = c.stack.back();
            c.stack.pop_back();
            const int h = c.stack.back();
            c.arcs.push_back({h, m, kUnlabeled});
            break;
        }
        case ActionType::Tag:
            c.tags.push_back(a.arg);
            break;
        case ActionType::Label:
            c.arcs.back().label = a.arg;
            break;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Trees and projectivity

inline std::vector<int> heads_from_tree(const DepTree& t) {
    std::vector<int> heads(t.n_words + 1, -1);
    int root_count = 0;
    for (const auto& a : t.arcs) {
        if (a.modifier < 1 || a.modifier > t.n_words || a.head < 1 || a.head > t.n_words ||
            a.head == a.modifier) {
            throw TransitionError("malformed arc <" + std::to_string(a.head) + "," +
                                  std::to_string(a.modifier) + ">");
        }
        if (heads[a.modifier] != -1)
            throw TransitionError("word " + std::to_string(a.modifier) + " has two heads");
        heads[a.modifier] = a.head;
    }
    for (int w = 1; w <= t.n_words; ++w) {
        if (heads[w] == -1) {
            heads[w] = 0;
            ++root_count;
        }
    }
    if (root_count != 1) throw TransitionError("tree must have exactly one root word");
    return heads;  // heads[0] unused
}

inline DepTree tree_from_heads(const std::vector<int>& heads,
                               const std::vector<int>* labels = nullptr) {
    DepTree t;
    t.n_words = static_cast<int>(heads.size());
    for (int m = 1; m <= t.n_words; ++m) {
        const int h = heads[m - 1];
        if (h == 0) continue;
        t.arcs.push_back({h, m, labels ? (*labels)[m - 1] : kUnlabeled});
    }
    return t;
}

namespace detail {

// Checks single-rootedness and acyclicity of a complete head assignment
// (1-based heads array, heads[0] unused, 0 = root).
inline bool is_tree(const std::vector<int>& heads, int n) {
    int roots = 0;
    for (int w = 1; w <= n; ++w) {
        if (heads[w] == 0) ++roots;
        if (heads[w] == w || heads[w] < 0 || heads[w] > n) return false;
    }
    if (roots != 1) return false;
    for (int w = 1; w <= n; ++w) {
        int cur = w, steps = 0;
        while (cur != 0) {
            cur = heads[cur];
            if (++steps > n) return false;  // cycle
        }
    }
    return true;
}

inline bool is_descendant(const std::vector<int>& heads, int w, int ancestor) {
    int cur = heads[w];
    while (cur != 0) {
        if (cur == ancestor) return true;
        cur = heads[cur];
    }
    return false;
}

inline bool arc_projective(const std::vector<int>& heads, int h, int m) {
    const int lo = std::min(h, m), hi = std::max(h, m);
    for (int w = lo + 1; w < hi; ++w) {
        if (w != h && !is_descendant(heads, w, h)) return false;
    }
    return true;
}

}  // namespace detail

// A complete tree is projective iff no two arcs cross and every word strictly
// inside an arc's span is a descendant of that arc's head.
inline bool is_projective(const DepTree& t) {
    const std::vector<int> heads = heads_from_tree(t);
    if (!detail::is_tree(heads, t.n_words))
        throw TransitionError("head assignment is not a tree");
    for (int m = 1; m <= t.n_words; ++m) {
        if (heads[m] == 0) continue;
        if (!detail::arc_projective(heads, heads[m], m)) return false;
    }
    // crossing check; for complete trees this is implied by the span
    // condition above, but is kept explicit as part of the definition
    for (int m1 = 1; m1 <= t.n_words; ++m1) {
        if (heads[m1] == 0) continue;
        for (int m2 = m1 + 1; m2 <= t.n_words; ++m2) {
            if (heads[m2] == 0) continue;
            const int a = std::min(heads[m1], m1), b = std::max(heads[m1], m1);
            const int c = std::min(heads[m2], m2), d = std::max(heads[m2], m2);
            const bool c_in = a < c && c < b, d_in = a < d && d < b;
            if (c_in != d_in && c != a && c != b && d != a && d != b) return false;
        }
    }
    return true;
}

// Repairs a non-projective tree by repeatedly re-attaching the modifier of a
// non-projective arc to its head's head until projectivity holds. Arc count
// and labels are preserved; projective inputs come back unchanged. When
// lift_count is given it receives the number of lifts performed.
inline DepTree projectivize(const DepTree& t, int* lift_count = nullptr) {
    std::vector<int> heads = heads_from_tree(t);
    std::vector<int> labels(t.n_words + 1, kUnlabeled);
    for (const auto& a : t.arcs) labels[a.modifier] = a.label;
    if (!detail::is_tree(heads, t.n_words))
        throw TransitionError("head assignment is not a tree");

    int lifts = 0;
    for (;;) {
        // smallest-span non-projective arc; ties broken by modifier index
        int best_m = 0, best_span = t.n_words + 1;
        for (int m = 1; m <= t.n_words; ++m) {
            if (heads[m] == 0) continue;
            if (detail::arc_projective(heads, heads[m], m)) continue;
            const int span = std::abs(heads[m] - m);
            if (span < best_span) {
                best_span = span;
                best_m = m;
            }
        }
        if (best_m == 0) break;
        // the head of a non-projective arc is never the root word, so it has
        // a grandparent to lift to
        heads[best_m] = heads[heads[best_m]];
        ++lifts;
    }
    if (lift_count) *lift_count = lifts;

    DepTree out;
    out.n_words = t.n_words;
    for (int m = 1; m <= t.n_words; ++m) {
        if (heads[m] != 0) out.arcs.push_back({heads[m], m, labels[m]});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Oracle and replay

// Derives the unique 4N-2 action sequence for a fully annotated projective
// sentence. Structural decisions follow the shortest-stack rule: reduce the
// top two stack items as soon as they hold a gold arc and the modifier has
// collected all of its own dependents.
inline std::vector<Action> oracle_sequence(const GoldParse& gold) {
    const int n = gold.size();
    if (n < 1) throw TransitionError("empty sentence");
    if (static_cast<int>(gold.tags.size()) != n)
        throw TransitionError("incomplete gold annotation: missing tags");
    std::vector<int> heads(n + 1, 0);
    std::vector<int> n_deps(n + 1, 0);
    int roots = 0;
    for (int m = 1; m <= n; ++m) {
        const int h = gold.heads[m - 1];
        if (h < 0 || h > n || h == m)
            throw TransitionError("incomplete gold annotation: bad head for word " +
                                  std::to_string(m));
        heads[m] = h;
        if (h == 0) {
            ++roots;
        } else {
            ++n_deps[h];
            if (gold.labels[m - 1] < 0)
                throw TransitionError("incomplete gold annotation: missing label for word " +
                                      std::to_string(m));
        }
    }
    if (roots != 1 || !detail::is_tree(heads, n))
        throw TransitionError("gold heads do not form a single-rooted tree");
    if (!is_projective(tree_from_heads(gold.heads)))
        throw TransitionError("gold tree is non-projective: projectivize the input first");

    std::vector<Action> actions;
    actions.reserve(4 * n - 2);
    std::vector<int> built(n + 1, 0);
    Configuration c(n);
    while (!is_terminal(c)) {
        Action a;
        switch (classifier_kind(c)) {
            case ClassifierKind::Tagging:
                a = tag_action(gold.tags[c.tagged_count()]);
                break;
            case ClassifierKind::Labeling:
                a = label_action(gold.labels[c.arcs.back().modifier - 1]);
                break;
            case ClassifierKind::Structural: {
                const int s0 = c.stack_at(0), s1 = c.stack_at(1);
                const bool left_gold =
                    s1 != 0 && heads[s1] == s0 && built[s1] == n_deps[s1];
                const bool right_gold =
                    s1 != 0 && heads[s0] == s1 && built[s0] == n_deps[s0];
                if (left_gold && right_gold)
                    throw TransitionError("oracle: Left and Right both gold (corrupt tree)");
                if (left_gold) {
                    a = left_action();
                    ++built[s0];
                } else if (right_gold) {
                    a = right_action();
                    ++built[s1];
                } else {
                    if (c.buffer_size() == 0)
                        throw TransitionError("oracle: stuck configuration (corrupt tree)");
                    a = shift_action();
                }
                break;
            }
        }
        c = apply_action(c, a);
        actions.push_back(a);
    }
    return actions;
}

struct ReplayResult {
    std::vector<int> tags;
    DepTree tree;
};

// Replays an action sequence from the initial configuration, failing fast on
// the first illegal action.
inline ReplayResult replay(const std::vector<Action>& actions, int n_words) {
    Configuration c(n_words);
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (const char* cond = detail::violated_condition(c, actions[i])) {
            throw TransitionError("illegal action " + to_string(actions[i]) + " at step " +
                                  std::to_string(i + 1) + ": " + cond);
        }
        c = apply_action(c, actions[i]);
    }
    ReplayResult r;
    r.tags = c.tags;
    r.tree.n_words = n_words;
    r.tree.arcs = c.arcs;
    return r;
}

// All single-rooted projective head assignments over n words, unlabeled.
// Brute force; intended as a test-support oracle, hence the small-n guard.
inline std::vector<DepTree> enumerate_projective_trees(int n) {
    if (n < 1 || n > 7)
        throw TransitionError("enumerate_projective_trees supports 1 <= n <= 7");
    std::vector<DepTree> out;
    std::vector<int> heads(n + 1, 0);  // heads[1..n] over {0..n}
    std::vector<int> choice(n + 1, 0);
    for (;;) {
        for (int w = 1; w <= n; ++w) heads[w] = choice[w];
        bool self = false;
        for (int w = 1; w <= n; ++w) self |= heads[w] == w;
        if (!self && detail::is_tree(heads, n)) {
            DepTree t = tree_from_heads(std::vector<int>(heads.begin() + 1, heads.end()));
            if (is_projective(t)) out.push_back(std::move(t));
        }
        // next head assignment, odometer-style
        int w = 1;
        while (w <= n && ++choice[w] > n) choice[w++] = 0;
        if (w > n) break;
    }
    return out;
}

}  // namespace jointparse
