#pragma once

// Finite-difference verification of the full analytic backward pass, used by
// both the test suites and the gradcheck CLI subcommand.

#include <functional>
#include <string>

#include "jointparse/model.hpp"

namespace jointparse {

struct GradCheckReport {
    double worst_rel_err = 0;
    std::string worst_param;
    long worst_index = -1;
    long n_checked = 0;
    double tolerance = 0;

    bool passed() const { return worst_rel_err <= tolerance; }
};

// Compares every trainable parameter's analytic gradient on the given gold
// sentence against central differences (step 1e-5) at 64-bit precision.
// Relative errors use max(|analytic|, |numeric|, 1e-4) as denominator so
// near-zero gradient pairs compare on an absolute scale. mutate_grads is a
// test seam: it runs after the analytic backward pass, letting fault
// injection verify that corruption is detected and attributed.
inline GradCheckReport grad_check(JointModel& model, const Sentence& sent, double tolerance,
                                  const std::function<void(ParameterStore&)>& mutate_grads = {}) {
    GradCheckReport report;
    report.tolerance = tolerance;

    ParameterStore& store = model.params();
    store.zero_grads();
    model.backward_nll(sent);
    if (mutate_grads) mutate_grads(store);

    const double h = 1e-5;
    for (std::size_t pi = 0; pi < store.size(); ++pi) {
        Parameter& p = store[pi];
        if (!p.trainable) continue;
        for (long i = 0; i < p.size(); ++i) {
            const double saved = p.value.data()[i];
            p.value.data()[i] = saved + h;
            const double up = model.sentence_nll(sent);
            p.value.data()[i] = saved - h;
            const double down = model.sentence_nll(sent);
            p.value.data()[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double analytic = p.grad.data()[i];
            const double rel = std::abs(analytic - numeric) /
                               std::max({std::abs(analytic), std::abs(numeric), 1e-4});
            ++report.n_checked;
            if (rel > report.worst_rel_err) {
                report.worst_rel_err = rel;
                report.worst_param = p.name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace jointparse
