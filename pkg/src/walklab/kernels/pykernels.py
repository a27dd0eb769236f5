"""Reference numpy implementation of the hot math kernels.

All training-time linear algebra funnels through this small ABI so the
compiled core in `_core.pyx` can replace it one function at a time. Layout
conventions shared by both backends:

- a network is a list of weight matrices with shape (fan_out, fan_in) plus
  bias vectors with shape (fan_out,), all float64 C-contiguous;
- inputs are batches with shape (batch, fan_in); hidden layers are ReLU,
  the output layer is the identity;
- the ReLU subgradient at exactly 0 is 0.
"""

import numpy as np

BACKEND = "python"


def mlp_forward(weights, biases, x):
    """Evaluate the stack on a batch, returning only the output."""
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = h @ w.T + b
        if i < last:
            np.maximum(h, 0.0, out=h)
    return h


def mlp_forward_cached(weights, biases, x):
    """Evaluate the stack and keep every layer input for the backward pass.

    Returns (output, acts) where acts[i] is the input fed to layer i;
    acts[0] is x itself, the rest are post-ReLU activations.
    """
    acts = [x]
    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(zip(weights, biases)):
        h = h @ w.T + b
        if i < last:
            np.maximum(h, 0.0, out=h)
            acts.append(h)
    return h, acts


def mlp_backward(weights, acts, upstream):
    """Reverse-mode sweep: gradients of sum(upstream * output).

    Returns (dweights, dbiases, dx). `acts` must come from
    mlp_forward_cached on the same weights.
    """
    d = upstream
    n = len(weights)
    dws = [None] * n
    dbs = [None] * n
    for i in range(n - 1, -1, -1):
        dws[i] = d.T @ acts[i]
        dbs[i] = d.sum(axis=0)
        d = d @ weights[i]
        if i > 0:
            d = d * (acts[i] > 0.0)
    return dws, dbs, d


def mlp_backward_input(weights, acts, upstream):
    """Input gradient only; skips parameter-gradient accumulation."""
    d = upstream
    for i in range(len(weights) - 1, -1, -1):
        d = d @ weights[i]
        if i > 0:
            d = d * (acts[i] > 0.0)
    return d


LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_LOG_2PI = float(np.log(2.0 * np.pi))


_ACTION_EDGE = float(np.nextafter(1.0, 0.0))


def head_sample(trunk_out, noise):
    """Tanh-squashed Gaussian draw from a [mean | log_std] trunk output.

    Returns (action, log_prob, std). log_std is clamped to [-20, 2]; the
    squash correction uses log(1 - tanh(x)^2) = 2*(log 2 - x - softplus(-2x)).
    Actions are pulled one ulp inside (-1, 1) where tanh saturates.
    """
    d = noise.shape[1]
    mean = trunk_out[:, :d]
    log_std = np.clip(trunk_out[:, d:], LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(log_std)
    pre = mean + std * noise
    action = np.clip(np.tanh(pre), -_ACTION_EDGE, _ACTION_EDGE)
    correction = 2.0 * (np.log(2.0) - pre - np.logaddexp(0.0, -2.0 * pre))
    log_prob = (-0.5 * (noise * noise) - 0.5 * _LOG_2PI - log_std - correction).sum(axis=1)
    return action, log_prob, std


def head_sample_grad(trunk_out, action, std, noise, d_action, d_log_prob):
    """Upstream for the trunk from gradients on (action, log_prob).

    d(log_prob)/d(pre) of the squash correction is 2*tanh(pre) = 2*action;
    the clamp gates the log-std column gradients.
    """
    d = noise.shape[1]
    coeff = d_log_prob[:, None]
    g_pre = d_action * (1.0 - action * action) + coeff * (2.0 * action)
    raw = trunk_out[:, d:]
    gate = (raw >= LOG_STD_MIN) & (raw <= LOG_STD_MAX)
    d_log_std = (g_pre * std * noise - coeff) * gate
    return np.concatenate([g_pre, d_log_std], axis=1)


def soft_backup(reward, bootstrap, gamma, alpha, q1t, q2t, logp):
    """Entropy-regularized twin-min backup: r + boot*g*(min(q1,q2) - a*logp)."""
    return reward + bootstrap * gamma * (np.minimum(q1t, q2t) - alpha * logp)


def value_backup(base, bootstrap, gamma, vt):
    """Plain discounted backup: base + boot*g*vt."""
    return base + bootstrap * gamma * vt


def mse_upstream(pred, target):
    """Mean-squared-error loss and its gradient w.r.t. pred (B x 1)."""
    resid = pred[:, 0] - target
    loss = float(np.mean(resid * resid))
    return loss, (2.0 / resid.shape[0]) * resid[:, None]


def adam_step_inplace(param, grad, m, v, step_count, lr, beta1, beta2, eps):
    """One bias-corrected Adam update, applied in place.

    `step_count` is the post-increment step counter (1 on the first call).
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * (grad * grad)
    bc1 = 1.0 - beta1 ** step_count
    bc2 = 1.0 - beta2 ** step_count
    param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def polyak_inplace(target, source, tau):
    target *= 1.0 - tau
    target += tau * source
