#include "siamhan/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace siamhan {

double distance(const Eigen::VectorXd& z1, const Eigen::VectorXd& z2) { return (z1 - z2).norm(); }

int verdict(double d, double eta) { return d < eta ? 1 : 0; }

double contrastive_loss(double d, int label, double margin) {
    if (label == 1) {
        return d * d;
    }
    double gap = std::max(0.0, margin - d);
    return gap * gap;
}

PairGradient pair_gradient(const ModelParams& params, const KnowledgeGraph& g1, const KnowledgeGraph& g2, int label,
                           double margin, double slope) {
    PairGradient out;
    out.grad = ModelParams::zeros(params.heads);
    EncoderTrace t1 = encode_trace(params, g1, slope);
    EncoderTrace t2 = encode_trace(params, g2, slope);
    Eigen::VectorXd diff = t1.embedding() - t2.embedding();
    out.distance = diff.norm();
    out.loss = contrastive_loss(out.distance, label, margin);

    Eigen::VectorXd d_z1;
    if (label == 1) {
        d_z1 = 2.0 * diff;
    } else if (out.distance < margin && out.distance > 0.0) {
        d_z1 = (-2.0 * (margin - out.distance) / out.distance) * diff;
    } else {
        d_z1 = Eigen::VectorXd::Zero(diff.size());
    }
    backpropagate(params, g1, t1, d_z1, slope, out.grad);
    backpropagate(params, g2, t2, -d_z1, slope, out.grad);
    return out;
}

double pair_loss(const ModelParams& params, const KnowledgeGraph& g1, const KnowledgeGraph& g2, int label,
                 double margin, double slope) {
    return contrastive_loss(distance(encode(params, g1, slope), encode(params, g2, slope)), label, margin);
}

double GradCheckReport::max_relative_error() const {
    double m = 0.0;
    for (const auto& t : tensors) {
        m = std::max(m, t.max_relative_error);
    }
    return m;
}

GradMismatch::GradMismatch(std::string tensor, GradCheckReport report)
    : ModelError(ModelErrc::grad_mismatch, "gradient mismatch in tensor " + tensor),
      tensor_(std::move(tensor)),
      report_(std::move(report)) {}

GradCheckReport grad_check(const ModelParams& params, const KnowledgeGraph& g1, const KnowledgeGraph& g2, int label,
                           const TrainConfig& config, const GradCheckOptions& options) {
    const double slope = config.leaky_relu_slope;
    PairGradient analytic = pair_gradient(params, g1, g2, label, config.margin, slope);
    if (options.tamper) {
        options.tamper(analytic.grad);
    }

    ModelParams probe = params;
    std::vector<std::pair<std::string, Eigen::MatrixXd*>> probe_tensors;
    std::vector<const Eigen::MatrixXd*> grad_tensors;
    probe.for_each([&](const std::string& name, Eigen::MatrixXd& t) { probe_tensors.emplace_back(name, &t); });
    analytic.grad.for_each([&](const std::string&, const Eigen::MatrixXd& t) { grad_tensors.push_back(&t); });

    std::mt19937_64 rng(options.seed);
    GradCheckReport report;
    std::string first_failure;
    for (std::size_t ti = 0; ti < probe_tensors.size(); ++ti) {
        auto& [name, tensor] = probe_tensors[ti];
        const Eigen::MatrixXd& g = *grad_tensors[ti];

        std::vector<Eigen::Index> entries(static_cast<std::size_t>(tensor->size()));
        std::iota(entries.begin(), entries.end(), Eigen::Index{0});
        if (options.max_entries_per_tensor > 0 && entries.size() > options.max_entries_per_tensor) {
            std::vector<Eigen::Index> picked;
            std::sample(entries.begin(), entries.end(), std::back_inserter(picked), options.max_entries_per_tensor,
                        rng);
            entries = std::move(picked);
        }

        TensorCheck check{name, 0.0, entries.size()};
        for (auto idx : entries) {
            double& slot = tensor->data()[idx];
            const double saved = slot;
            slot = saved + options.step;
            double plus = pair_loss(probe, g1, g2, label, config.margin, slope);
            slot = saved - options.step;
            double minus = pair_loss(probe, g1, g2, label, config.margin, slope);
            slot = saved;

            double numeric = (plus - minus) / (2.0 * options.step);
            double exact = g.data()[idx];
            double err = std::abs(numeric - exact);
            double rel = err <= options.absolute_floor ? 0.0 : err / std::max(std::abs(numeric), std::abs(exact));
            check.max_relative_error = std::max(check.max_relative_error, rel);
        }
        if (check.max_relative_error > options.tolerance && first_failure.empty()) {
            first_failure = name;
        }
        report.tensors.push_back(check);
    }
    if (!first_failure.empty()) {
        throw GradMismatch(first_failure, report);
    }
    return report;
}

} // namespace siamhan
