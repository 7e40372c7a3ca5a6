use super::ChatMessage;

pub trait TokenEstimator {
    fn estimate(&self, messages: &[ChatMessage]) -> usize;
}

/// Characters divided by a fixed ratio, rounded up. The default ratio is 4.
#[derive(Debug, Clone, Copy)]
pub struct CharsPerToken(pub usize);

impl Default for CharsPerToken {
    fn default() -> Self {
        Self(4)
    }
}

impl TokenEstimator for CharsPerToken {
    fn estimate(&self, messages: &[ChatMessage]) -> usize {
        let chars: usize = messages.iter().map(|m| m.content.chars().count()).sum();
        chars.div_ceil(self.0.max(1))
    }
}

pub fn estimate_tokens<'a>(
    requests: impl IntoIterator<Item = &'a [ChatMessage]>,
    estimator: &dyn TokenEstimator,
) -> Vec<usize> {
    requests.into_iter().map(|r| estimator.estimate(r)).collect()
}

/// Total tokens / 1000 × price.
pub fn estimate_cost(token_counts: impl IntoIterator<Item = usize>, price_per_1k: f64) -> f64 {
    let total: usize = token_counts.into_iter().sum();
    total as f64 / 1000.0 * price_per_1k
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_volume() {
        let counts = std::iter::repeat_n(714, 200_000);
        let cheap = estimate_cost(counts.clone(), 0.0015);
        assert!((cheap - 214.2).abs() < 1e-9);
        let gpt4 = estimate_cost(counts, 0.03);
        assert!((gpt4 - 4284.0).abs() < 1e-6);
        assert_eq!(estimate_cost(std::iter::empty(), 0.03), 0.0);
    }

    #[test]
    fn chars_per_token() {
        let msgs = [ChatMessage::system("abcde"), ChatMessage::user("xyz")];
        assert_eq!(CharsPerToken::default().estimate(&msgs), 2);
        assert_eq!(CharsPerToken(1).estimate(&msgs), 8);
        assert_eq!(CharsPerToken::default().estimate(&[ChatMessage::user("é")]), 1);
        let reqs: Vec<Vec<ChatMessage>> = vec![msgs.to_vec(), vec![]];
        assert_eq!(estimate_tokens(reqs.iter().map(Vec::as_slice), &CharsPerToken::default()), [2, 0]);
    }
}
