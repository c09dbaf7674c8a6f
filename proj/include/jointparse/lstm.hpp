#pragma once

// Standard LSTM cell (sigmoid gates, tanh candidate and state) composed from
// tape primitives so the backward pass comes for free.

#include <string>
#include <vector>

#include "jointparse/tape.hpp"

namespace jointparse {

struct LstmCell {
    int input_dim = 0;
    int hidden_dim = 0;
    // gate matrices are hidden x (input + hidden), biases hidden x 1
    Parameter* w_input = nullptr;
    Parameter* w_forget = nullptr;
    Parameter* w_output = nullptr;
    Parameter* w_cand = nullptr;
    Parameter* b_input = nullptr;
    Parameter* b_forget = nullptr;
    Parameter* b_output = nullptr;
    Parameter* b_cand = nullptr;

    struct State {
        Tape::NodeId h = -1;
        Tape::NodeId c = -1;
    };

    static LstmCell create(ParameterStore& store, const std::string& prefix, int input_dim,
                           int hidden_dim) {
        if (input_dim <= 0 || hidden_dim <= 0)
            throw NeuralError("lstm " + prefix + ": dimensions must be positive");
        LstmCell cell;
        cell.input_dim = input_dim;
        cell.hidden_dim = hidden_dim;
        const int z = input_dim + hidden_dim;
        cell.w_input = &store.add(prefix + ".w_input", hidden_dim, z);
        cell.w_forget = &store.add(prefix + ".w_forget", hidden_dim, z);
        cell.w_output = &store.add(prefix + ".w_output", hidden_dim, z);
        cell.w_cand = &store.add(prefix + ".w_cand", hidden_dim, z);
        cell.b_input = &store.add(prefix + ".b_input", hidden_dim, 1);
        cell.b_forget = &store.add(prefix + ".b_forget", hidden_dim, 1);
        cell.b_output = &store.add(prefix + ".b_output", hidden_dim, 1);
        cell.b_cand = &store.add(prefix + ".b_cand", hidden_dim, 1);
        return cell;
    }

    State initial(Tape& tape) const {
        return {tape.input(Vec::Zero(hidden_dim)), tape.input(Vec::Zero(hidden_dim))};
    }

    State step(Tape& tape, const State& prev, Tape::NodeId x) const {
        const auto z = tape.concat({x, prev.h});
        const auto i = tape.sigmoid(tape.affine(*w_input, *b_input, z));
        const auto f = tape.sigmoid(tape.affine(*w_forget, *b_forget, z));
        const auto o = tape.sigmoid(tape.affine(*w_output, *b_output, z));
        const auto g = tape.tanh(tape.affine(*w_cand, *b_cand, z));
        const auto c = tape.add(tape.mul(f, prev.c), tape.mul(i, g));
        const auto h = tape.mul(o, tape.tanh(c));
        return {h, c};
    }
};

// Runs a cell over a sequence from a zero state; returns one state per input.
inline std::vector<LstmCell::State> lstm_chain(Tape& tape, const LstmCell& cell,
                                               const std::vector<Tape::NodeId>& inputs) {
    std::vector<LstmCell::State> states;
    states.reserve(inputs.size());
    LstmCell::State s = cell.initial(tape);
    for (Tape::NodeId x : inputs) {
        s = cell.step(tape, s, x);
        states.push_back(s);
    }
    return states;
}

}  // namespace jointparse
