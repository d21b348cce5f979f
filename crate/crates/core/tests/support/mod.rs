pub mod event_oracle;
