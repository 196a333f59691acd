// Copyright 2026 The GazeForge Authors
// SPDX-License-Identifier: Apache-2.0
#include "gazeforge/model/network.hpp"

#include <cmath>

#include "gazeforge/core/error.hpp"

namespace gazeforge::model {

namespace layers {

namespace {
Node leaf(std::string name, Layer layer) {
    Node n;
    n.type = Node::Type::layer;
    n.name = std::move(name);
    n.layer = layer;
    return n;
}
}  // namespace

Node conv(std::string name, std::size_t channels, std::size_t kernel, std::size_t stride, PadRule rule,
          std::size_t pad) {
    Layer l;
    l.kind = LayerKind::conv;
    l.channels = channels;
    l.kernel = kernel;
    l.stride = stride;
    l.pad_rule = rule;
    l.pad = pad;
    return leaf(std::move(name), l);
}

Node batch_norm(std::string name) {
    Layer l;
    l.kind = LayerKind::batch_norm;
    return leaf(std::move(name), l);
}

Node leaky_relu(std::string name, double slope) {
    Layer l;
    l.kind = LayerKind::activation;
    l.activation = nn::ActivationKind::leaky_relu;
    l.slope = slope;
    return leaf(std::move(name), l);
}

Node relu(std::string name) {
    Layer l;
    l.kind = LayerKind::activation;
    l.activation = nn::ActivationKind::relu;
    return leaf(std::move(name), l);
}

Node pool(std::string name, nn::PoolMode mode, std::size_t size, std::size_t stride, std::size_t pad) {
    Layer l;
    l.kind = LayerKind::pool;
    l.pool_mode = mode;
    l.kernel = size;
    l.stride = stride == 0 ? size : stride;
    l.pad = pad;
    return leaf(std::move(name), l);
}

Node inferred_avg_pool(std::string name) { return pool(std::move(name), nn::PoolMode::avg, 0, 0, 0); }

Node dropout(std::string name, double rate) {
    Layer l;
    l.kind = LayerKind::dropout;
    l.rate = rate;
    return leaf(std::move(name), l);
}

Node dense(std::string name, std::size_t units) {
    Layer l;
    l.kind = LayerKind::dense;
    l.channels = units;
    return leaf(std::move(name), l);
}

Node flatten(std::string name) {
    Layer l;
    l.kind = LayerKind::flatten;
    return leaf(std::move(name), l);
}

Node chain(std::string name, std::vector<Node> children) {
    Node n;
    n.type = Node::Type::chain;
    n.name = std::move(name);
    n.children = std::move(children);
    return n;
}

Node branches(std::string name, std::vector<Node> children) {
    Node n = chain(std::move(name), std::move(children));
    n.type = Node::Type::branches;
    return n;
}

Node residual(std::string name, Node main, Node shortcut) {
    Node n;
    n.type = Node::Type::residual;
    n.name = std::move(name);
    n.children.push_back(std::move(main));
    n.children.push_back(std::move(shortcut));
    return n;
}

}  // namespace layers

std::string extents_str(const Extents& e) {
    std::string s;
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(e[i]);
    }
    return s;
}

const Extents& Network::extents_after(const std::string& layer) const {
    for (const auto& [name, ext] : trace)
        if (name == layer) return ext;
    throw UsageError("network '" + this->name + "' has no layer '" + layer + "'");
}

namespace {

std::string join(const std::string& path, const std::string& name) {
    if (name.empty()) return path;
    return path.empty() ? name : path + "." + name;
}

[[noreturn]] void fail(const std::string& layer, const std::string& what) {
    throw ConfigError("layer '" + layer + "': " + what);
}

void expect_rank(const std::string& layer, const Extents& in, std::size_t rank) {
    if (in.size() != rank) {
        fail(layer, "expects rank-" + std::to_string(rank) + " input, got " + extents_str(in));
    }
}

std::size_t infer_pool_window(const std::string& layer, std::size_t extent, std::size_t target) {
    if (target == 0 || target > extent) {
        fail(layer, "cannot pool extent " + std::to_string(extent) + " down to " + std::to_string(target));
    }
    if (extent % target == 0) return extent / target;
    for (std::size_t k = 2; k <= extent; ++k)
        if (extent / k == target) return k;
    fail(layer, "no pooling window maps extent " + std::to_string(extent) + " to " + std::to_string(target));
}

struct Resolver {
    Network& net;

    Extents layer(Layer& l, const std::string& path, const Extents& in, const Extents* target) {
        switch (l.kind) {
            case LayerKind::conv: {
                expect_rank(path, in, 3);
                const std::size_t c = in[0], h = in[1], w = in[2];
                l.in_channels = c;
                switch (l.pad_rule) {
                    case PadRule::valid: l.padding = {}; break;
                    case PadRule::fixed: l.padding = nn::Padding2d::uniform(l.pad); break;
                    case PadRule::same: l.padding = nn::same_padding(h, w, l.kernel, l.stride); break;
                }
                if (h + l.padding.top + l.padding.bottom < l.kernel || w + l.padding.left + l.padding.right < l.kernel) {
                    fail(path, "input extent " + std::to_string(h) + "x" + std::to_string(w) + " is smaller than kernel " +
                                   std::to_string(l.kernel));
                }
                const std::size_t oh = (h + l.padding.top + l.padding.bottom - l.kernel) / l.stride + 1;
                const std::size_t ow = (w + l.padding.left + l.padding.right - l.kernel) / l.stride + 1;
                net.params.push_back({path + ".weight", nn::Shape{l.channels, c, l.kernel, l.kernel}, Init::he_uniform,
                                      c * l.kernel * l.kernel});
                net.params.push_back({path + ".bias", nn::Shape{l.channels}, Init::zeros, 0});
                return {l.channels, oh, ow};
            }
            case LayerKind::batch_norm: {
                if (in.size() != 1 && in.size() != 3) fail(path, "expects rank-1 or rank-3 input, got " + extents_str(in));
                const std::size_t c = in[0];
                net.params.push_back({path + ".gamma", nn::Shape{c}, Init::ones, 0});
                net.params.push_back({path + ".beta", nn::Shape{c}, Init::zeros, 0});
                net.buffers.push_back({path + ".running_mean", nn::Shape{c}, Init::zeros, 0});
                net.buffers.push_back({path + ".running_var", nn::Shape{c}, Init::ones, 0});
                return in;
            }
            case LayerKind::activation:
            case LayerKind::dropout: return in;
            case LayerKind::pool: {
                expect_rank(path, in, 3);
                const std::size_t h = in[1], w = in[2];
                if (l.kernel == 0) {
                    if (!target || target->size() != 3) fail(path, "pool window inference needs a residual target");
                    const std::size_t kh = infer_pool_window(path, h, (*target)[1]);
                    const std::size_t kw = infer_pool_window(path, w, (*target)[2]);
                    if (kh != kw) fail(path, "inferred pooling window is not square");
                    l.kernel = kh;
                    l.stride = kh;
                }
                if (l.pad >= l.kernel) fail(path, "pool padding must be smaller than the window");
                if (h + 2 * l.pad < l.kernel || w + 2 * l.pad < l.kernel) {
                    fail(path, "input extent " + std::to_string(h) + "x" + std::to_string(w) +
                                   " is smaller than pool window " + std::to_string(l.kernel));
                }
                l.in_channels = in[0];
                l.padding = nn::Padding2d::uniform(l.pad);
                return {in[0], (h + 2 * l.pad - l.kernel) / l.stride + 1, (w + 2 * l.pad - l.kernel) / l.stride + 1};
            }
            case LayerKind::dense: {
                expect_rank(path, in, 1);
                l.in_channels = in[0];
                net.params.push_back({path + ".weight", nn::Shape{in[0], l.channels}, Init::he_uniform, in[0]});
                net.params.push_back({path + ".bias", nn::Shape{l.channels}, Init::zeros, 0});
                return {l.channels};
            }
            case LayerKind::flatten: {
                std::size_t n = 1;
                for (auto d : in) n *= d;
                return {n};
            }
        }
        fail(path, "unknown layer kind");
    }

    Extents node(Node& n, const std::string& parent, const Extents& in, const Extents* target) {
        const std::string path = join(parent, n.name);
        switch (n.type) {
            case Node::Type::layer: {
                Extents out = layer(n.layer, path, in, target);
                net.trace.emplace_back(path, out);
                return out;
            }
            case Node::Type::chain: {
                Extents cur = in;
                for (auto& child : n.children) cur = node(child, path, cur, target);
                net.trace.emplace_back(path, cur);
                return cur;
            }
            case Node::Type::branches: {
                Extents out;
                for (auto& child : n.children) {
                    const Extents e = node(child, path, in, nullptr);
                    if (e.size() != 3) fail(join(path, child.name), "branch output must be rank 3");
                    if (out.empty()) {
                        out = e;
                    } else if (e[1] != out[1] || e[2] != out[2]) {
                        fail(join(path, child.name), "branch spatial extent " + extents_str(e) +
                                                          " does not match sibling " + extents_str(out));
                    } else {
                        out[0] += e[0];
                    }
                }
                net.trace.emplace_back(path, out);
                return out;
            }
            case Node::Type::residual: {
                const Extents main = node(n.children.at(0), path, in, target);
                const Extents shortcut = node(n.children.at(1), path, in, &main);
                if (shortcut != main) {
                    fail(path, "residual shape mismatch: main " + extents_str(main) + " vs shortcut " +
                                   extents_str(shortcut));
                }
                net.trace.emplace_back(join(path, n.children[1].name + ".add"), main);
                return main;
            }
        }
        fail(path, "unknown node type");
    }
};

template <class T>
struct Runner {
    ModelState<T>& state;
    nn::Graph<T>& g;
    nn::Mode mode;
    Rng& rng;

    nn::NodeId param(const std::string& name) { return g.parameter(state.param(name), name); }

    nn::NodeId layer(const Layer& l, const std::string& path, nn::NodeId x) {
        switch (l.kind) {
            case LayerKind::conv:
                return nn::ops::conv2d(g, x, param(path + ".weight"), param(path + ".bias"), l.stride, l.padding, path);
            case LayerKind::batch_norm:
                return nn::ops::batch_norm(g, x, param(path + ".gamma"), param(path + ".beta"),
                                           state.buffer(path + ".running_mean"), state.buffer(path + ".running_var"),
                                           mode, path);
            case LayerKind::activation: return nn::ops::activation(g, x, l.activation, l.slope, path);
            case LayerKind::dropout: return nn::ops::dropout(g, x, l.rate, rng, mode, path);
            case LayerKind::pool: return nn::ops::pool2d(g, x, l.pool_mode, l.kernel, l.stride, l.pad, path);
            case LayerKind::dense: return nn::ops::dense(g, x, param(path + ".weight"), param(path + ".bias"), path);
            case LayerKind::flatten: return nn::ops::flatten(g, x, path);
        }
        throw UsageError("unknown layer kind at '" + path + "'");
    }

    nn::NodeId node(const Node& n, const std::string& parent, nn::NodeId x) {
        const std::string path = join(parent, n.name);
        switch (n.type) {
            case Node::Type::layer: return layer(n.layer, path, x);
            case Node::Type::chain:
                for (const auto& child : n.children) x = node(child, path, x);
                return x;
            case Node::Type::branches: {
                std::vector<nn::NodeId> outs;
                for (const auto& child : n.children) outs.push_back(node(child, path, x));
                return nn::ops::concat(g, outs, path);
            }
            case Node::Type::residual: {
                const nn::NodeId main = node(n.children[0], path, x);
                const nn::NodeId shortcut = node(n.children[1], path, x);
                return nn::ops::add(g, main, shortcut, join(path, n.children[1].name + ".add"));
            }
        }
        throw UsageError("unknown node type at '" + path + "'");
    }
};

}  // namespace

Network resolve_network(std::string name, Node root, Extents input) {
    Network net;
    net.name = std::move(name);
    net.root = std::move(root);
    net.input = std::move(input);
    Resolver r{net};
    net.output = r.node(net.root, net.name, net.input, nullptr);
    return net;
}

template <class T>
void initialize(const Network& net, ModelState<T>& state, std::uint64_t seed) {
    const Rng base(seed);
    auto make = [&](const TensorSpec& s) {
        nn::Tensor<T> t(s.shape);
        switch (s.init) {
            case Init::zeros: break;
            case Init::ones: t.fill(T(1)); break;
            case Init::he_uniform: {
                Rng rng = base.fork(s.name);
                const double bound = std::sqrt(6.0 / static_cast<double>(s.fan_in));
                for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
                break;
            }
        }
        return t;
    };
    for (const auto& s : net.params) state.params.insert_or_assign(s.name, nn::Parameter<T>(make(s)));
    for (const auto& s : net.buffers) state.buffers.insert_or_assign(s.name, make(s));
}

template <class T>
nn::NodeId run_network(const Network& net, ModelState<T>& state, nn::Graph<T>& g, nn::NodeId x, nn::Mode mode,
                       Rng& rng) {
    const auto& shape = g.value(x).shape();
    Extents per_sample(shape.dims().begin() + (shape.rank() ? 1 : 0), shape.dims().end());
    if (shape.rank() == 0 || per_sample != net.input) {
        throw UsageError("network '" + net.name + "' expects per-sample input " + extents_str(net.input) + ", got " +
                         shape.str());
    }
    Runner<T> runner{state, g, mode, rng};
    return runner.node(net.root, net.name, x);
}

template void initialize<float>(const Network&, ModelState<float>&, std::uint64_t);
template void initialize<double>(const Network&, ModelState<double>&, std::uint64_t);
template nn::NodeId run_network<float>(const Network&, ModelState<float>&, nn::Graph<float>&, nn::NodeId, nn::Mode,
                                       Rng&);
template nn::NodeId run_network<double>(const Network&, ModelState<double>&, nn::Graph<double>&, nn::NodeId,
                                        nn::Mode, Rng&);

}  // namespace gazeforge::model
