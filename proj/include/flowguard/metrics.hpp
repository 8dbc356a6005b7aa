#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace flowguard {

/// Binary confusion counts with class 1 (DDoS) as the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t tn = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred);

// Zero denominators yield 0 and set the matching flag instead of producing NaN.
struct CoreMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;
};

CoreMetrics core_metrics(const ConfusionMatrix& cm);

struct AgreementMetrics {
    double kappa = 0.0;
    double mcc = 0.0;
    bool kappa_degenerate = false;
    bool mcc_degenerate = false;
};

AgreementMetrics agreement_metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // scores >= threshold are called positive; +inf at the origin
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// ROC over distinct score values (descending), ties grouped into one step;
/// area by the trapezoidal rule.
RocCurve roc_auc(std::span<const int> y_true, std::span<const double> scores);

double brier_score(std::span<const int> y_true, std::span<const double> probs);

struct MetricsReport {
    ConfusionMatrix cm;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    double kappa = 0.0;
    double mcc = 0.0;
    double brier = 0.0;
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;
    bool auc_degenerate = false;  // one-class truth; auc reported as 0
    bool kappa_degenerate = false;
    bool mcc_degenerate = false;
};

/// Full report; `roc` receives the curve when the truth has both classes.
MetricsReport evaluate_predictions(std::span<const int> y_true, std::span<const int> y_pred,
                                   std::span<const double> probs, RocCurve* roc = nullptr);

void write_roc_csv(const RocCurve& roc, std::ostream& out);
void write_confusion_csv(const ConfusionMatrix& cm, std::ostream& out);

}  // namespace flowguard
