#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "pqx/checkpoint.hpp"
#include "pqx/dataset.hpp"
#include "pqx/errors.hpp"
#include "pqx/io.hpp"
#include "pqx/train.hpp"

using namespace pqx;

TEST_CASE("arch: presets validate and the desk preset has 8672 parameters") {
    const Network desk(ArchDescriptor::desk());
    CHECK(desk.param_count() == 8672);
    CHECK(desk.buffer_count() == 0);
    CHECK(desk.n_classes() == 16);
    const Network table1(ArchDescriptor::table1());
    CHECK(table1.n_classes() == 16);
    CHECK(table1.buffer_count() == 2 * (32 + 64 + 128 + 128));
}

TEST_CASE("arch: JSON round trip preserves the layer list") {
    const auto a = ArchDescriptor::table1();
    const auto b = ArchDescriptor::from_json(a.to_json());
    REQUIRE(b.layers.size() == a.layers.size());
    CHECK(b.to_json() == a.to_json());
    CHECK(Network(b).param_count() == Network(a).param_count());
}

TEST_CASE("arch: invalid chains are configuration errors") {
    ArchDescriptor a;
    a.input_length = 16;
    a.input_channels = 1;
    a.layers = {{.kind = LayerKind::dense, .features = 4}, {.kind = LayerKind::softmax}};
    CHECK_THROWS_AS(Network{a}, ConfigError); // dense before flatten (length != 1)

    a.layers = {{.kind = LayerKind::flatten}, {.kind = LayerKind::dense, .features = 4}};
    CHECK_THROWS_AS(Network{a}, ConfigError); // missing final softmax

    a.layers = {{.kind = LayerKind::conv1d, .kernel = 32, .channels = 2, .stride = 1},
                {.kind = LayerKind::flatten},
                {.kind = LayerKind::dense, .features = 4},
                {.kind = LayerKind::softmax}};
    CHECK_THROWS_AS(Network{a}, ConfigError); // kernel longer than input

    a.layers = {{.kind = LayerKind::batchnorm, .features = 7},
                {.kind = LayerKind::flatten},
                {.kind = LayerKind::dense, .features = 4},
                {.kind = LayerKind::softmax}};
    CHECK_THROWS_AS(Network{a}, ConfigError); // batchnorm features mismatch
}

TEST_CASE("forward: all-zero weights give the uniform distribution") {
    const Network net(ArchDescriptor::desk());
    std::vector<double> theta(net.param_count(), 0.0), buffers;
    net.init_buffers(buffers);
    std::vector<double> x(640, 0.0);
    const auto probs = net.forward_one(theta, buffers, x, Mode::eval);
    for (double p : probs) CHECK(p == doctest::Approx(1.0 / 16).epsilon(1e-12));
}

TEST_CASE("forward: outputs form a probability simplex, even for extreme logits") {
    const Network net(ArchDescriptor::desk());
    for (uint64_t seed = 0; seed < 8; ++seed) {
        std::vector<double> theta, buffers;
        net.init_params(theta, seed);
        net.init_buffers(buffers);
        const double scale = seed % 2 == 0 ? 1.0 : 40.0; // saturate half the cases
        for (double& t : theta) t *= scale;
        Rng rng(seed);
        std::vector<double> x(640);
        for (double& v : x) v = rng.normal();
        const auto probs = net.forward_one(theta, buffers, x, Mode::eval);
        double sum = 0.0;
        for (double p : probs) {
            CHECK(p >= 0.0);
            CHECK(std::isfinite(p));
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("gradients match central finite differences on mixed architectures") {
    for (int family = 0; family < 5; ++family) {
        const Network net(pqxtest::small_arch(family, 100 + static_cast<uint64_t>(family)));
        auto prob = pqxtest::random_problem(net, 3, 200 + static_cast<uint64_t>(family));
        const auto res = pqxtest::gradcheck(net, prob.theta, prob.buffers, prob.input,
                                            prob.labels, 1e-3, 40, 31 + static_cast<uint64_t>(family));
        INFO("family ", family, " max err ", res.max_err, " skipped ", res.n_skipped);
        CHECK(res.max_err < 1e-4);
        CHECK(res.n_checked >= 32); // the FD-validity filter may drop a few
    }
}

TEST_CASE("loss: confident correct prediction contributes ~zero; l2 at theta=0 is zero") {
    // flatten -> dense(K) head lets the bias pin the logits directly
    ArchDescriptor a;
    a.input_length = 4;
    a.input_channels = 1;
    a.layers = {{.kind = LayerKind::flatten},
                {.kind = LayerKind::dense, .features = 4},
                {.kind = LayerKind::softmax}};
    const Network net(a);
    std::vector<double> theta(net.param_count(), 0.0), buffers;
    net.init_buffers(buffers);
    theta[net.param_count() - 4] = 50.0; // bias of class 0

    BatchTensor input;
    input.resize(1, 1, 4);
    std::vector<int> labels{0};
    std::vector<double> grad(net.param_count());
    std::vector<double> bufs = buffers;
    const double loss = net.loss_and_grad(theta, bufs, false, input, labels, 0.0, grad);
    CHECK(loss == doctest::Approx(0.0).epsilon(1e-9).scale(1));

    // theta = 0 with l2 > 0: the penalty and its gradient vanish
    std::fill(theta.begin(), theta.end(), 0.0);
    const double l0 = net.loss_and_grad(theta, bufs, false, input, labels, 0.0, grad);
    std::vector<double> grad2(net.param_count());
    const double l1 = net.loss_and_grad(theta, bufs, false, input, labels, 0.5, grad2);
    CHECK(l0 == l1);
    CHECK(grad == grad2);
}

TEST_CASE("loss: non-finite loss raises a divergence error") {
    const Network net(pqxtest::small_arch(0, 5));
    auto prob = pqxtest::random_problem(net, 2, 5);
    // infinite bias on the last logit forces a non-finite cross entropy
    prob.theta[net.param_count() - 1] = std::numeric_limits<double>::infinity();
    std::vector<double> grad(net.param_count());
    CHECK_THROWS_AS(
        net.loss_and_grad(prob.theta, prob.buffers, false, prob.input, prob.labels, 0.0, grad),
        DivergenceError);
}

TEST_CASE("batchnorm: eval forward is pure and leaves buffers untouched") {
    const Network net(pqxtest::small_arch(3, 7));
    auto prob = pqxtest::random_problem(net, 2, 7);
    const auto buffers_before = prob.buffers;
    BatchTensor probs1, probs2;
    net.forward(prob.theta, prob.buffers, prob.input, Mode::eval, probs1);
    net.forward(prob.theta, prob.buffers, prob.input, Mode::eval, probs2);
    CHECK(probs1.data == probs2.data);
    CHECK(prob.buffers == buffers_before);
}

TEST_CASE("training: lr halves every period and the log records it") {
    GenConfig cfg;
    cfg.per_class = 4;
    cfg.seed = 21;
    cfg.split = {0.5, 0.25, 0.25};
    const auto ds = generate_corpus(cfg);
    const Network net(ArchDescriptor::desk());
    TrainConfig tc;
    tc.epochs = 12;
    tc.lr_halving_period_epochs = 10;
    tc.seed = 5;
    tc.batch_size = 16;
    const auto result = train(net, ds, tc);
    REQUIRE(result.log.epochs.size() == 12);
    for (int e = 0; e < 10; ++e) CHECK(result.log.epochs[static_cast<size_t>(e)].lr == 0.01);
    CHECK(result.log.epochs[10].lr == 0.005);
    CHECK(result.log.epochs[11].lr == 0.005);
}

TEST_CASE("training: identical seeds give bit-identical parameters") {
    GenConfig cfg;
    cfg.per_class = 4;
    cfg.seed = 8;
    cfg.split = {0.5, 0.25, 0.25};
    const auto ds = generate_corpus(cfg);
    const Network net(ArchDescriptor::desk());
    TrainConfig tc;
    tc.epochs = 2;
    tc.seed = 33;
    const auto a = train(net, ds, tc);
    const auto b = train(net, ds, tc);
    CHECK(a.params.theta == b.params.theta);
    CHECK(a.log.best_epoch == b.log.best_epoch);
    TrainConfig tc2 = tc;
    tc2.seed = 34;
    const auto c = train(net, ds, tc2);
    CHECK(a.params.theta != c.params.theta);
}

TEST_CASE("training: returned parameters reproduce the best validation accuracy") {
    GenConfig cfg;
    cfg.per_class = 6;
    cfg.seed = 13;
    cfg.split = {0.5, 0.25, 0.25};
    const auto ds = generate_corpus(cfg);
    const Network net(ArchDescriptor::desk());
    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 2;
    const auto result = train(net, ds, tc);
    double best = 0.0;
    for (const auto& e : result.log.epochs) best = std::max(best, e.val_acc);
    CHECK(result.log.best_val_acc == best);
    const auto val = ds.split_indices(Split::val);
    CHECK(accuracy(net, result.params.theta, result.params.buffers, ds, val) ==
          doctest::Approx(best));
}

TEST_CASE("predict/entropy: uniform and one-hot reference values, ties to lowest id") {
    std::vector<double> uniform(16, 1.0 / 16);
    CHECK(predictive_entropy(uniform) == doctest::Approx(std::log(16.0)).epsilon(1e-12));
    std::vector<double> onehot(16, 0.0);
    onehot[3] = 1.0;
    CHECK(predictive_entropy(onehot) == 0.0);
    CHECK(predict_class(onehot) == 3);
    std::vector<double> tie{0.4, 0.4, 0.2};
    CHECK(predict_class(tie) == 0);
}

TEST_CASE("checkpoint: PQCK round trip preserves arch, parameters, and log") {
    const auto dir = pqxtest::temp_dir("pqck");
    const Network net(pqxtest::small_arch(3, 40));
    Checkpoint ck;
    ck.params.arch = net.arch();
    net.init_params(ck.params.theta, 4);
    net.init_buffers(ck.params.buffers);
    ck.log.best_epoch = 2;
    ck.log.best_val_acc = 0.75;
    ck.log.epochs.push_back({0, 0.01, 1.5, 0.3, 0.4});

    const auto path = dir + "/m.pqck";
    save_checkpoint(ck, path);
    const auto loaded = load_checkpoint(path);
    CHECK(loaded.params.arch.to_json() == ck.params.arch.to_json());
    REQUIRE(loaded.params.theta.size() == ck.params.theta.size());
    for (size_t i = 0; i < ck.params.theta.size(); ++i)
        CHECK(loaded.params.theta[i] == static_cast<double>(static_cast<float>(ck.params.theta[i])));
    CHECK(loaded.log.best_epoch == 2);
    CHECK(loaded.log.epochs.size() == 1);

    // corrupt magic
    auto bytes = io::slurp(path);
    bytes[0] = 'X';
    io::spit(path, bytes);
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
    // truncate
    save_checkpoint(ck, path);
    bytes = io::slurp(path);
    io::spit(path, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(path), IoError);
    std::filesystem::remove_all(dir);
}
