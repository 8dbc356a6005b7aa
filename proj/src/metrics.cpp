#include "flowguard/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "flowguard/common.hpp"

namespace flowguard {

namespace {

void check_binary(std::span<const int> labels, const char* what) {
    for (int v : labels)
        if (v != 0 && v != 1) throw Error(std::string(what) + ": label outside {0,1}");
}

}  // namespace

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) throw Error("confusion_matrix: length mismatch");
    check_binary(y_true, "confusion_matrix");
    check_binary(y_pred, "confusion_matrix");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] == 1)
            (y_pred[i] == 1 ? cm.tp : cm.fn)++;
        else
            (y_pred[i] == 1 ? cm.fp : cm.tn)++;
    }
    return cm;
}

CoreMetrics core_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw Error("core_metrics: empty confusion matrix");
    CoreMetrics m;
    const auto tp = static_cast<double>(cm.tp);
    m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
    if (cm.tp + cm.fp == 0)
        m.precision_degenerate = true;
    else
        m.precision = tp / static_cast<double>(cm.tp + cm.fp);
    if (cm.tp + cm.fn == 0)
        m.recall_degenerate = true;
    else
        m.recall = tp / static_cast<double>(cm.tp + cm.fn);
    if (m.precision + m.recall == 0.0)
        m.f1_degenerate = true;
    else
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

AgreementMetrics agreement_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw Error("agreement_metrics: empty confusion matrix");
    AgreementMetrics a;
    const auto n = static_cast<double>(cm.total());
    const auto tp = static_cast<double>(cm.tp);
    const auto tn = static_cast<double>(cm.tn);
    const auto fp = static_cast<double>(cm.fp);
    const auto fn = static_cast<double>(cm.fn);

    const double observed = (tp + tn) / n;
    const double chance = ((tp + fp) * (tp + fn) + (tn + fn) * (tn + fp)) / (n * n);
    if (1.0 - chance == 0.0)
        a.kappa_degenerate = true;
    else
        a.kappa = (observed - chance) / (1.0 - chance);

    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0)
        a.mcc_degenerate = true;
    else
        a.mcc = (tp * tn - fp * fn) / std::sqrt(denom);
    return a;
}

RocCurve roc_auc(std::span<const int> y_true, std::span<const double> scores) {
    if (y_true.size() != scores.size()) throw Error("roc_auc: length mismatch");
    check_binary(y_true, "roc_auc");
    const auto positives = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), 1));
    const std::size_t negatives = y_true.size() - positives;
    if (positives == 0 || negatives == 0) throw Error("roc_auc: both classes are required");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve roc;
    roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    std::size_t tp = 0;
    std::size_t fp = 0;
    double area2 = 0.0;  // twice the area in units of (tp, fp) counts
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        const std::size_t tp_before = tp;
        const std::size_t fp_before = fp;
        for (; i < order.size() && scores[order[i]] == threshold; ++i) (y_true[order[i]] == 1 ? tp : fp)++;
        area2 += static_cast<double>(fp - fp_before) * static_cast<double>(tp + tp_before);
        roc.points.push_back({static_cast<double>(fp) / static_cast<double>(negatives),
                              static_cast<double>(tp) / static_cast<double>(positives), threshold});
    }
    roc.auc = area2 / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
    return roc;
}

double brier_score(std::span<const int> y_true, std::span<const double> probs) {
    if (y_true.size() != probs.size()) throw Error("brier_score: length mismatch");
    if (y_true.empty()) throw Error("brier_score: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0 && probs[i] <= 1.0)) throw Error("brier_score: probability outside [0,1]");
        const double d = probs[i] - static_cast<double>(y_true[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(probs.size());
}

MetricsReport evaluate_predictions(std::span<const int> y_true, std::span<const int> y_pred,
                                   std::span<const double> probs, RocCurve* roc) {
    MetricsReport r;
    r.cm = confusion_matrix(y_true, y_pred);
    const auto core = core_metrics(r.cm);
    r.accuracy = core.accuracy;
    r.precision = core.precision;
    r.recall = core.recall;
    r.f1 = core.f1;
    r.precision_degenerate = core.precision_degenerate;
    r.recall_degenerate = core.recall_degenerate;
    r.f1_degenerate = core.f1_degenerate;
    const auto agree = agreement_metrics(r.cm);
    r.kappa = agree.kappa;
    r.mcc = agree.mcc;
    r.kappa_degenerate = agree.kappa_degenerate;
    r.mcc_degenerate = agree.mcc_degenerate;
    r.brier = brier_score(y_true, probs);
    if (r.cm.tp + r.cm.fn == 0 || r.cm.tn + r.cm.fp == 0) {
        r.auc_degenerate = true;
    } else {
        auto curve = roc_auc(y_true, probs);
        r.auc = curve.auc;
        if (roc) *roc = std::move(curve);
    }
    return r;
}

void write_roc_csv(const RocCurve& roc, std::ostream& out) {
    out << "fpr,tpr\n";
    out.precision(17);
    for (const auto& p : roc.points) out << p.fpr << ',' << p.tpr << '\n';
}

void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out) {
    out << "actual,predicted_0,predicted_1\n";
    out << "0," << cm.tn << ',' << cm.fp << '\n';
    out << "1," << cm.fn << ',' << cm.tp << '\n';
}

}  // namespace flowguard
